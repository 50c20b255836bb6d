#include <cmath>

#include "doctest.h"
#include "isoprnu/error.hpp"
#include "isoprnu/noise_fit.hpp"
#include "isoprnu/parallel.hpp"
#include "isoprnu/prnu_core.hpp"
#include "isoprnu/sensor_sim.hpp"

using namespace isoprnu;

namespace {

SensorProfile profile(std::size_t size, double sigma_k, double gain) {
    SensorProfile p;
    p.width = p.height = size;
    p.sigma_k = sigma_k;
    p.gain = gain;
    return p;
}

}  // namespace

TEST_CASE("prnu field statistics") {
    SUBCASE("zero sigma gives an all-zero field") {
        const auto f = gen_prnu_field(256, 256, 0.0, 3);
        for (double v : f.values.values()) REQUIRE(v == 0.0);
    }
    SUBCASE("sample std near sigma_k at 1024^2") {
        const auto f = gen_prnu_field(1024, 1024, 0.01, 7);
        const double sd = std::sqrt(variance(f.values));
        CHECK(sd >= 0.0095);
        CHECK(sd <= 0.0105);
        CHECK(std::abs(mean(f.values)) < 3 * 0.01 / 1024.0);
    }
    SUBCASE("same arguments give bit-identical fields") {
        CHECK(gen_prnu_field(128, 96, 0.01, 5).values == gen_prnu_field(128, 96, 0.01, 5).values);
        CHECK_FALSE(gen_prnu_field(128, 96, 0.01, 5).values == gen_prnu_field(128, 96, 0.01, 6).values);
    }
    CHECK_THROWS_AS(gen_prnu_field(16, 16, -1.0, 1), Error);
}

TEST_CASE("exposure follows the variance law") {
    SUBCASE("noise-free limit is (1+k) phi") {
        SensorProfile p = profile(64, 0.01, 1e-12);
        const auto prnu = gen_prnu_field(64, 64, p.sigma_k, 2);
        const auto scene = natural_scene(64, 64, 4);
        const auto e = simulate_exposure(scene, prnu, p, 9);
        for (std::size_t i = 0; i < e.plane.size(); ++i)
            REQUIRE(e.plane[i] == doctest::Approx(std::clamp((1 + prnu.values[i]) * scene.phi[i], 0.0, 1.0)).epsilon(1e-5));
    }
    SUBCASE("flat 512^2 block variance matches phi^2 sigma_k^2 + g phi") {
        SensorProfile p = profile(512, 0.01, 1e-4);
        const auto prnu = gen_prnu_field(512, 512, p.sigma_k, 11);
        const auto e = simulate_exposure(flat_scene(512, 512, 0.5), prnu, p, 12);
        CHECK(variance(e.plane) == doctest::Approx(7.5e-5).epsilon(0.05));
        const double se = std::sqrt(7.5e-5 / e.plane.size());
        CHECK(std::abs(mean(e.plane) - 0.5) < 3 * se);
    }
    SUBCASE("doubling gain raises residual variance") {
        SensorProfile p = profile(256, 0.007, 2e-5);
        const auto prnu = gen_prnu_field(256, 256, p.sigma_k, 1);
        const Scene s = flat_scene(256, 256, 0.4);
        const double v1 = variance(simulate_exposure(s, prnu, p, 1).plane);
        p.gain *= 2;
        const double v2 = variance(simulate_exposure(s, prnu, p, 1).plane);
        CHECK(v2 > v1);
        CHECK(p.residual_variance(0.4) > profile(256, 0.007, 2e-5).residual_variance(0.4));
    }
    SUBCASE("clipping above 1% is flagged") {
        SensorProfile p = profile(64, 0.007, 1e-3);
        const auto prnu = gen_prnu_field(64, 64, p.sigma_k, 1);
        CHECK(simulate_exposure(flat_scene(64, 64, 0.99), prnu, p, 1).clip_warning());
        CHECK_FALSE(simulate_exposure(flat_scene(64, 64, 0.5), prnu, p, 1).clip_warning());
    }
}

TEST_CASE("exposure is independent of thread count") {
    SensorProfile p = profile(200, 0.007, 1e-4);
    const auto prnu = gen_prnu_field(200, 200, p.sigma_k, 3);
    const auto scene = natural_scene(200, 200, 8);
    set_default_threads(1);
    const auto a = simulate_exposure(scene, prnu, p, 5).plane;
    const auto ra = residual(a).values;
    set_default_threads(4);
    const auto b = simulate_exposure(scene, prnu, p, 5).plane;
    const auto rb = residual(b).values;
    set_default_threads(1);
    CHECK(a == b);
    CHECK(ra == rb);
}

TEST_CASE("develop") {
    const auto noise = simulate_exposure(flat_scene(64, 64, 0.5), gen_prnu_field(64, 64, 0.0, 1), profile(64, 0, 1e-3), 4).plane;
    SUBCASE("identity settings") {
        const Plane out = develop(noise, 1.0, 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == doctest::Approx(noise[i]).epsilon(1e-9));
    }
    SUBCASE("gamma on a constant") {
        const Plane out = develop(Plane(16, 16, 0.25), 2.0, 0.0);
        for (double v : out.values()) REQUIRE(v == doctest::Approx(0.5));
    }
    SUBCASE("quantization spreads white-noise autocorrelation") {
        SensorProfile p = profile(256, 0.0, 2e-3);
        const Plane raw = simulate_exposure(flat_scene(256, 256, 0.5), gen_prnu_field(256, 256, 0.0, 1), p, 3).plane;
        auto radius = [](const Plane& x) {
            Residual r;
            r.values = x;
            for (double& v : r.values.values()) v -= 0.5;
            return spreading_radius(autocorrelation(r), 0.05);
        };
        CHECK(radius(raw) == 0);
        CHECK(radius(develop(raw, 1.0, 4.0)) > radius(raw));
    }
}

TEST_CASE("bayer subsampling") {
    Plane p(4, 4);
    for (std::size_t i = 0; i < 16; ++i) p[i] = static_cast<double>(i);
    const Plane a = bayer_subsample(p, 0, 0), b = bayer_subsample(p, 1, 1);
    CHECK(a == Plane(2, 2, {0, 2, 8, 10}));
    CHECK(b == Plane(2, 2, {5, 7, 13, 15}));
    CHECK(bayer_subsample(Plane(6, 4, 0.3), 0, 1) == Plane(3, 2, 0.3));
}

TEST_CASE("scenes") {
    const Scene f = flat_scene(32, 16, 0.3);
    for (double v : f.phi.values()) REQUIRE(v == 0.3);
    const Scene n = natural_scene(128, 128, 3);
    for (double v : n.phi.values()) REQUIRE((v > 0.0 && v < 1.0));
    CHECK(natural_scene(128, 128, 3).phi == n.phi);
    const Scene r = ramp_scene(11, 2, 0.1, 0.9);
    CHECK(r.phi(0, 0) == doctest::Approx(0.1));
    CHECK(r.phi(1, 10) == doctest::Approx(0.9));
    CHECK(parse_scene("flat:0.5", 8, 8).phi == flat_scene(8, 8, 0.5).phi);
    CHECK_THROWS_AS(parse_scene("stripes:3", 8, 8), Error);
    CHECK_THROWS_AS(flat_scene(8, 8, 1.0), Error);
}

TEST_CASE("camera pipeline noise reduction") {
    CameraPipeline pipe;
    pipe.base_gain = 1e-4;
    pipe.nr_exponent = 0.5;
    CHECK(pipe.noise_attenuation(1e-4) == 1.0);
    CHECK(pipe.noise_attenuation(4e-4) == doctest::Approx(0.5));
    CHECK(pipe.noise_attenuation(1e-5) == 1.0);
    pipe.white_level = -1;
    CHECK_THROWS_AS(pipe.validate(), Error);
}
