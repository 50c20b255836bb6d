#include "isoprnu/sensor_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "isoprnu/error.hpp"
#include "isoprnu/parallel.hpp"
#include "isoprnu/random.hpp"
#include "isoprnu/transforms.hpp"

namespace isoprnu {

void SensorProfile::validate() const {
    require(width >= 1 && height >= 1, "sensor dimensions must be positive");
    require(sigma_k >= 0.0, "sigma_k must be non-negative");
    require(sigma_k < 0.1, "sigma_k must be below 0.1 (weak PRNU approximation)");
    require(gain > 0.0, "gain must be strictly positive");
    require(eta_bar > 0.0, "eta_bar must be strictly positive");
    require(read_noise >= 0.0, "read_noise must be non-negative");
    require(pedestal >= 0.0, "pedestal must be non-negative");
}

PrnuField gen_prnu_field(std::size_t width, std::size_t height, double sigma_k, std::uint64_t seed) {
    require(width >= 1 && height >= 1, "PRNU field dimensions must be positive");
    require(sigma_k >= 0.0, "sigma_k must be non-negative");
    PrnuField field{Plane(width, height), sigma_k};
    if (sigma_k == 0.0) return field;
    auto v = field.values.values();
    parallel_for(height, [&](std::size_t r) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t i = r * width + c;
            v[i] = sigma_k * counter_normal(seed, stream::prnu, i);
        }
    });
    return field;
}

namespace {

void check_shapes(const Scene& scene, const PrnuField& prnu, const SensorProfile& profile) {
    require(scene.phi.same_shape(prnu.values), "scene and PRNU field dimensions differ");
    require(scene.phi.width() == profile.width && scene.phi.height() == profile.height,
            "scene and sensor profile dimensions differ");
}

void check_variance(const Scene& scene, const SensorProfile& profile) {
    const auto [lo, hi] = std::minmax_element(scene.phi.values().begin(), scene.phi.values().end());
    (void)hi;
    const double phi = *lo;
    if (profile.gain * phi + profile.offset_variance() < 0.0) {
        std::ostringstream os;
        os << "negative noise variance at pixel intensity phi=" << phi
           << " (pedestal term g^2 p0 exceeds g phi + g^2 s^2)";
        fail(ErrorKind::InvalidParameter, os.str());
    }
}

template <class PixelFn>
Exposure render(const Scene& scene, PixelFn&& pixel) {
    const std::size_t w = scene.phi.width(), h = scene.phi.height();
    Exposure out{Plane(w, h), 0.0};
    std::vector<std::size_t> clipped(h, 0);
    parallel_for(h, [&](std::size_t r) {
        for (std::size_t c = 0; c < w; ++c) {
            double v = pixel(r * w + c);
            if (v < 0.0 || v > 1.0) {
                ++clipped[r];
                v = std::clamp(v, 0.0, 1.0);
            }
            out.plane(r, c) = v;
        }
    });
    std::size_t total = 0;
    for (auto n : clipped) total += n;
    out.clip_fraction = static_cast<double>(total) / static_cast<double>(w * h);
    return out;
}

}  // namespace

Exposure simulate_exposure(const Scene& scene, const PrnuField& prnu, const SensorProfile& profile,
                           std::uint64_t seed) {
    profile.validate();
    check_shapes(scene, prnu, profile);
    check_variance(scene, profile);
    const double offset = profile.offset_variance();
    return render(scene, [&](std::size_t i) {
        const double phi = scene.phi[i];
        const double sd = std::sqrt(std::max(0.0, profile.gain * phi + offset));
        return (1.0 + prnu.values[i]) * phi + sd * counter_normal(seed, stream::exposure, i);
    });
}

namespace {

constexpr std::array<double, 64> kJpegLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
};

}  // namespace

Plane develop(const Plane& raw, double gamma, double quant_strength) {
    require(gamma > 0.0, "gamma must be positive");
    require(quant_strength >= 0.0, "quant_strength must be non-negative");
    Plane out = raw;
    if (gamma != 1.0)
        for (double& v : out.values()) v = std::pow(std::max(v, 0.0), 1.0 / gamma);
    if (quant_strength == 0.0) return out;

    const std::size_t w = out.width(), h = out.height();
    const std::size_t bw = (w + 7) / 8, bh = (h + 7) / 8;
    Plane src = out;
    parallel_for(bh, [&](std::size_t by) {
        Plane block(8, 8);
        for (std::size_t bx = 0; bx < bw; ++bx) {
            // edge blocks are padded by replicating the last row/column
            for (std::size_t r = 0; r < 8; ++r)
                for (std::size_t c = 0; c < 8; ++c)
                    block(r, c) = src(std::min(by * 8 + r, h - 1), std::min(bx * 8 + c, w - 1));
            Plane coeffs = dct2(block);
            for (std::size_t k = 0; k < 64; ++k) {
                const double step = quant_strength * kJpegLuma[k] / 255.0;
                coeffs[k] = step * std::round(coeffs[k] / step);
            }
            const Plane rec = idct2(coeffs);
            for (std::size_t r = 0; r < 8 && by * 8 + r < h; ++r)
                for (std::size_t c = 0; c < 8 && bx * 8 + c < w; ++c) out(by * 8 + r, bx * 8 + c) = rec(r, c);
        }
    });
    return out;
}

Plane bayer_subsample(const Plane& raw, int row_offset, int col_offset) {
    require((row_offset == 0 || row_offset == 1) && (col_offset == 0 || col_offset == 1),
            "Bayer offsets must be 0 or 1");
    require(raw.width() >= 2 && raw.height() >= 2, "Bayer subsampling needs at least a 2x2 plane");
    const std::size_t w = raw.width() / 2, h = raw.height() / 2;
    Plane out(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out(r, c) = raw(2 * r + row_offset, 2 * c + col_offset);
    return out;
}

// Scenes -------------------------------------------------------------------

Scene flat_scene(std::size_t width, std::size_t height, double phi) {
    require(phi > 0.0 && phi < 1.0, "scene intensity must lie in (0,1)");
    return Scene{Plane(width, height, phi)};
}

Scene ramp_scene(std::size_t width, std::size_t height, double lo, double hi) {
    require(lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0, "ramp endpoints must lie in (0,1)");
    Scene s{Plane(width, height)};
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            s.phi(r, c) = width > 1 ? lo + (hi - lo) * static_cast<double>(c) / static_cast<double>(width - 1) : lo;
    return s;
}

namespace {

struct Shape {
    bool disc;
    double cy, cx, ry, rx;
    int fill;  // 0 flat, 1 grating, 2 noise texture, 3 highlight
    double level, amp, fy, fx;
};

}  // namespace

Scene natural_scene(std::size_t width, std::size_t height, std::uint64_t seed) {
    require(width >= 8 && height >= 8, "natural scene needs at least 8x8 pixels");
    std::uint64_t counter = 0;
    auto u = [&] { return counter_uniform(seed, stream::scene, counter++); };
    const double w = static_cast<double>(width), h = static_cast<double>(height);
    const double two_pi = 2.0 * std::numbers::pi;

    const double base = 0.3 + 0.3 * u();
    struct Wave { double amp, fy, fx, phase; };
    std::array<Wave, 4> waves{};
    for (auto& wv : waves) wv = {0.03 + 0.07 * u(), (0.3 + 1.7 * u()) / h, (0.3 + 1.7 * u()) / w, two_pi * u()};

    const std::size_t n_shapes = 10 + (width * height) / (64 * 64) / 8;
    std::vector<Shape> shapes(n_shapes);
    const double dim = std::min(w, h);
    for (auto& s : shapes) {
        s.disc = u() < 0.5;
        s.cy = h * u();
        s.cx = w * u();
        s.ry = dim * (0.04 + 0.14 * u());
        s.rx = dim * (0.04 + 0.14 * u());
        const double kind = u();
        s.fill = kind < 0.45 ? 0 : kind < 0.72 ? 1 : kind < 0.9 ? 2 : 3;
        s.level = 0.1 + 0.75 * u();
        s.amp = s.fill == 1 ? 0.03 + 0.12 * u() : 0.03 + 0.09 * u();
        const double period = 3.0 + 13.0 * u(), angle = two_pi * u();
        s.fy = std::sin(angle) / period;
        s.fx = std::cos(angle) / period;
        if (s.fill == 3) s.level = 0.965 + 0.015 * u();
    }
    // at least one highlight, drawn on top
    Shape& top = shapes.back();
    top.fill = 3;
    top.level = 0.965 + 0.015 * u();

    Scene scene{Plane(width, height)};
    parallel_for(height, [&](std::size_t r) {
        const double y = static_cast<double>(r);
        for (std::size_t c = 0; c < width; ++c) {
            const double x = static_cast<double>(c);
            double v = base;
            for (const auto& wv : waves) v += wv.amp * std::cos(two_pi * (wv.fy * y + wv.fx * x) + wv.phase);
            for (std::size_t k = 0; k < shapes.size(); ++k) {
                const auto& s = shapes[k];
                const double dy = (y - s.cy) / s.ry, dx = (x - s.cx) / s.rx;
                const bool inside = s.disc ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
                if (!inside) continue;
                switch (s.fill) {
                    case 0:
                    case 3: v = s.level; break;
                    case 1: v = s.level + s.amp * std::sin(two_pi * (s.fy * y + s.fx * x)); break;
                    default: {
                        const std::uint64_t idx = k * width * height + r * width + c;
                        v = s.level + s.amp * (2.0 * counter_uniform(seed, stream::scene_texture, idx) - 1.0);
                    }
                }
            }
            scene.phi(r, c) = std::clamp(v, 0.02, 0.98);
        }
    });
    return scene;
}

Scene parse_scene(const std::string& spec, std::size_t width, std::size_t height) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    try {
        if (parts.size() == 2 && parts[0] == "flat") return flat_scene(width, height, std::stod(parts[1]));
        if (parts.size() == 3 && parts[0] == "ramp")
            return ramp_scene(width, height, std::stod(parts[1]), std::stod(parts[2]));
        if (parts.size() == 2 && parts[0] == "natural") return natural_scene(width, height, std::stoull(parts[1]));
    } catch (const std::logic_error&) {
        // fall through to the error below
    }
    fail(ErrorKind::InvalidParameter, "unrecognized scene spec '" + spec + "' (flat:V, ramp:LO:HI, natural:SEED)");
}

// Camera pipeline ----------------------------------------------------------

void CameraPipeline::validate() const {
    require(base_gain > 0.0, "base_gain must be positive");
    require(nr_exponent >= 0.0, "nr_exponent must be non-negative");
    require(white_level > 0.0, "white_level must be positive");
    require(gamma > 0.0, "gamma must be positive");
    require(quant_strength >= 0.0, "quant_strength must be non-negative");
}

double CameraPipeline::noise_attenuation(double gain) const noexcept {
    return std::min(1.0, std::pow(gain / base_gain, -nr_exponent));
}

Exposure render_camera_image(const Scene& scene, const PrnuField& prnu, const SensorProfile& profile,
                             const CameraPipeline& pipeline, std::uint64_t seed) {
    profile.validate();
    pipeline.validate();
    check_shapes(scene, prnu, profile);
    check_variance(scene, profile);
    const double offset = profile.offset_variance();
    const double atten = pipeline.noise_attenuation(profile.gain);
    Exposure raw = render(scene, [&](std::size_t i) {
        const double phi = scene.phi[i];
        const double sd = atten * std::sqrt(std::max(0.0, profile.gain * phi + offset));
        return ((1.0 + prnu.values[i]) * phi + sd * counter_normal(seed, stream::exposure, i)) / pipeline.white_level;
    });
    raw.plane = develop(raw.plane, pipeline.gamma, pipeline.quant_strength);
    for (double& v : raw.plane.values()) v = std::clamp(v, 0.0, 1.0);
    return raw;
}

}  // namespace isoprnu
