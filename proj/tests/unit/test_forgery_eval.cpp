#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "isoprnu/error.hpp"
#include "isoprnu/forgery_eval.hpp"
#include "isoprnu/random.hpp"

using namespace isoprnu;

namespace {

Plane gradient(std::size_t n) {
    Plane p(n, n);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i % 997) / 997.0;
    return p;
}

CorrelationMap grid(std::size_t rows, std::size_t cols, std::size_t block, std::size_t stride, std::size_t w,
                    std::size_t h) {
    CorrelationMap m;
    m.rows = rows;
    m.cols = cols;
    m.block = block;
    m.stride = stride;
    m.image_width = w;
    m.image_height = h;
    m.rho.assign(rows * cols, 0.0);
    m.degenerate.assign(rows * cols, 0);
    return m;
}

double energy(const CorrelationMap& m, const CorrelationMap& p, const DetectorParams& dp,
              const std::vector<std::uint8_t>& labels) {
    const double s0 = dp.resolved_sigma0(m.block), s1 = dp.resolved_sigma1(m.block);
    double e = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) {
            const std::size_t k = r * m.cols + c;
            const auto [auth, tamp] = unary_costs(m.rho[k], p.rho[k], s0, s1, dp.p0);
            e += labels[k] ? tamp : auth;
            if (c + 1 < m.cols) e += dp.beta * (labels[k] != labels[k + 1]);
            if (r + 1 < m.rows) e += dp.beta * (labels[k] != labels[k + m.cols]);
        }
    return e;
}

}  // namespace

TEST_CASE("forgery synthesis") {
    const Plane img = gradient(1024);
    ForgerySpec spec;
    spec.donor_row = 0;
    spec.donor_col = 0;
    const Forgery f = make_forgery(img, spec);
    CHECK(mean(f.truth) * f.truth.size() == doctest::Approx(256.0 * 256.0));
    CHECK(f.truth(spec.target_row(), spec.target_col()) == 1.0);
    for (std::size_t i = 0; i < img.size(); ++i)
        if (f.truth[i] == 0.0) REQUIRE(f.forged[i] == img[i]);
    CHECK(f.forged(384, 384) == img(0, 0));

    ForgerySpec self = spec;
    self.donor_row = spec.target_row();
    self.donor_col = spec.target_col();
    CHECK_THROWS_AS(make_forgery(img, self), Error);
    ForgerySpec overlap = spec;
    overlap.donor_row = spec.target_row() + 255;
    overlap.donor_col = spec.target_col();
    CHECK_THROWS_AS(make_forgery(img, overlap), Error);
    ForgerySpec big = spec;
    big.patch = 1024;
    CHECK_THROWS_AS(make_forgery(img, big), Error);
    CHECK_THROWS_AS(make_forgery(gradient(512), spec), Error);
}

TEST_CASE("detector rules") {
    SUBCASE("equal variances and even prior give the midpoint test") {
        DetectorParams dp;
        dp.beta = 0;
        dp.p0 = 0.5;
        dp.sigma0 = dp.sigma1 = 0.05;
        auto m = grid(1, 6, 32, 32, 192, 32), p = m;
        m.rho = {0.0, 0.09, 0.11, 0.2, -0.1, 0.3};
        p.rho = {0.2, 0.2, 0.2, 0.2, 0.2, 0.2};
        const auto labels = detect_blocks(m, p, dp).labels;
        CHECK(labels == std::vector<std::uint8_t>{1, 1, 0, 0, 1, 0});
    }
    SUBCASE("observed equal to predicted stays authentic") {
        auto m = grid(4, 4, 32, 32, 128, 128);
        for (std::size_t k = 0; k < 16; ++k) m.rho[k] = 0.02 * static_cast<double>(k);
        DetectorParams dp;
        dp.p0 = 0.3;
        const Plane mask = detect(m, m, dp);
        CHECK(mean(mask) == 0.0);
    }
    SUBCASE("invalid variances") {
        auto m = grid(1, 1, 32, 32, 32, 32);
        DetectorParams dp;
        dp.sigma0 = 0.0;
        CHECK_THROWS_AS(detect_blocks(m, m, dp), Error);
    }
    CHECK(DetectorParams{}.resolved_sigma0(64) == doctest::Approx(1.0 / 64));
    CHECK(DetectorParams{}.resolved_sigma1(64) == doctest::Approx(2.0 / 64));
}

TEST_CASE("beta = 0 matches a per-block Bayes oracle") {
    std::size_t agree = 0;
    for (std::size_t t = 0; t < 2000; ++t) {
        auto u = [&](std::uint64_t k) { return counter_uniform(17, 4, 8 * t + k); };
        const double rho = 2 * u(0) - 1, rho_hat = u(1), s0 = 0.01 + 0.1 * u(2), s1 = 0.01 + 0.2 * u(3),
                     p0 = 0.01 + 0.98 * u(4);
        auto m = grid(1, 1, 32, 32, 32, 32), p = m;
        m.rho = {rho};
        p.rho = {rho_hat};
        DetectorParams dp;
        dp.beta = 0;
        dp.p0 = p0;
        dp.sigma0 = s0;
        dp.sigma1 = s1;
        const double lt = std::log(p0) - std::log(s0) - 0.5 * rho * rho / (s0 * s0);
        const double la = std::log1p(-p0) - std::log(s1) - 0.5 * (rho - rho_hat) * (rho - rho_hat) / (s1 * s1);
        agree += (detect_blocks(m, p, dp).labels[0] == 1) == (lt > la);
    }
    CHECK(agree == 2000);
}

TEST_CASE("ICM energy never increases and ends at a local minimum") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto m = grid(12, 15, 32, 16, 256, 208), p = m;
        for (std::size_t k = 0; k < m.rho.size(); ++k) {
            m.rho[k] = 0.15 * counter_uniform(s, 1, k) + ((k % 15 > 5 && k / 15 > 4) ? -0.05 : 0.05);
            p.rho[k] = 0.1;
        }
        DetectorParams dp;
        dp.beta = 0.5 + s;
        dp.p0 = 0.2;
        const auto det = detect_blocks(m, p, dp);
        for (std::size_t i = 1; i < det.energy.size(); ++i) CHECK(det.energy[i] <= det.energy[i - 1] + 1e-9);
        CHECK(det.energy.back() == doctest::Approx(energy(m, p, dp, det.labels)));
        // no single flip lowers the energy
        const double e = energy(m, p, dp, det.labels);
        for (std::size_t k = 0; k < det.labels.size(); ++k) {
            auto flipped = det.labels;
            flipped[k] ^= 1;
            CHECK(energy(m, p, dp, flipped) >= e - 1e-9);
        }
    }
}

TEST_CASE("rasterization and block scoring") {
    auto g = grid(3, 3, 32, 16, 70, 70);
    std::vector<std::uint8_t> labels{1, 0, 0, 1, 1, 0, 0, 0, 1};
    const Plane mask = rasterize_labels(g, labels);
    // pixel (0,0) is covered only by block (0,0)
    CHECK(mask(0, 0) == 1.0);
    // pixel (20,20) is covered by blocks (0,0),(0,1),(1,0),(1,1): three of four tampered
    CHECK(mask(20, 20) == 1.0);
    // pixel (40,40) by (1,1),(1,2),(2,1),(2,2): two of four is not a majority
    CHECK(mask(40, 40) == 0.0);
    // beyond the grid
    CHECK(mask(69, 69) == 0.0);

    Plane truth(70, 70);
    for (std::size_t r = 10; r < 50; ++r)
        for (std::size_t c = 5; c < 40; ++c) truth(r, c) = 1.0;
    const BlockScorer scorer(g, truth);
    for (std::uint64_t s = 0; s < 30; ++s) {
        std::vector<std::uint8_t> l(9);
        for (std::size_t k = 0; k < 9; ++k) l[k] = counter_uniform(s, 8, k) < 0.5;
        const auto fast = scorer.score(l).rates();
        const auto slow = pixel_metrics(rasterize_labels(g, l), truth);
        CHECK(fast.tpr == doctest::Approx(slow.tpr));
        CHECK(fast.fpr == doctest::Approx(slow.fpr));
    }
}

TEST_CASE("pixel metrics") {
    Plane truth(10, 10);
    for (std::size_t i = 0; i < 30; ++i) truth[i] = 1.0;
    Plane inv = truth;
    for (double& v : inv.values()) v = 1.0 - v;
    CHECK(pixel_metrics(truth, truth).tpr == 1.0);
    CHECK(pixel_metrics(truth, truth).fpr == 0.0);
    CHECK(pixel_metrics(inv, truth).tpr == 0.0);
    CHECK(pixel_metrics(inv, truth).fpr == 1.0);
    CHECK(pixel_metrics(Plane(10, 10), truth).tpr == 0.0);
    CHECK(pixel_metrics(Plane(10, 10), truth).fpr == 0.0);
}

TEST_CASE("ROC envelope") {
    CHECK(roc_envelope({{1, 0.1, 0.05, 0.5}}).size() == 1);
    const auto env = roc_envelope({{1, 0.1, 0.05, 0.5}, {1, 0.2, 0.08, 0.4}, {1, 0.3, 0.1, 0.7}, {1, 0.4, 0.3, 0.9}});
    REQUIRE(env.size() == 2);
    CHECK(env[0].fpr == 0.05);
    CHECK(env[1].fpr == 0.1);
    CHECK(envelope_tpr(env, 0.025) == doctest::Approx(0.25));
    CHECK(envelope_tpr(env, 0.075) == doctest::Approx(0.6));
    CHECK(envelope_tpr(env, 0.2) == doctest::Approx(0.7));

    std::vector<RocRun> runs;
    for (std::size_t i = 0; i < 200; ++i) runs.push_back({0, 0, 0.25 * counter_uniform(3, 1, i), counter_uniform(3, 2, i)});
    const auto e2 = roc_envelope(runs);
    for (std::size_t i = 1; i < e2.size(); ++i) {
        CHECK(e2[i].fpr > e2[i - 1].fpr);
        CHECK(e2[i].tpr >= e2[i - 1].tpr);
        CHECK(e2[i].fpr <= 0.2);
    }
    const auto lower = roc_envelope({{0, 0, 0.05, 0.4}, {0, 0, 0.1, 0.6}});
    CHECK(envelope_dominates(env, lower));
    CHECK_FALSE(envelope_dominates(lower, env));
    CHECK(envelope_shortfall(lower, env) == doctest::Approx(0.1));
    CHECK(default_roc_grid().size() >= 80);
    CHECK(roc_csv(env).rfind("beta,p0,fpr,tpr\n", 0) == 0);
}

TEST_CASE("mask and overlay export") {
    const auto dir = std::filesystem::temp_directory_path();
    Plane mask(8, 8), truth(8, 8);
    mask[0] = truth[0] = truth[1] = 1.0;
    mask[2] = 1.0;
    write_mask((dir / "isoprnu_unit_mask.pgm").string(), mask);
    write_overlay((dir / "isoprnu_unit_overlay.ppm").string(), Plane(8, 8, 0.5), mask, truth);
    CHECK(std::filesystem::file_size(dir / "isoprnu_unit_mask.pgm") > 64);
    CHECK(std::filesystem::file_size(dir / "isoprnu_unit_overlay.ppm") > 192);
    std::filesystem::remove(dir / "isoprnu_unit_mask.pgm");
    std::filesystem::remove(dir / "isoprnu_unit_overlay.ppm");
}
