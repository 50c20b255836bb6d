#include "isoprnu/transforms.hpp"

#include <fftw3.h>

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "isoprnu/error.hpp"
#include "isoprnu/parallel.hpp"

namespace isoprnu {

namespace {
std::atomic<unsigned> g_threads{1};
}

unsigned default_threads() noexcept { return g_threads.load(); }
void set_default_threads(unsigned n) noexcept { g_threads.store(n == 0 ? 1u : n); }

const std::vector<double>& dct_basis(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<std::vector<double>>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        auto basis = std::make_unique<std::vector<double>>(n * n);
        for (std::size_t k = 0; k < n; ++k) {
            const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (std::size_t i = 0; i < n; ++i)
                (*basis)[k * n + i] = scale * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
        }
        slot = std::move(basis);
    }
    return *slot;
}

namespace {

// out = M * in * M^T (forward) or M^T * in * M (inverse), n x n.
Plane separable(const Plane& in, bool forward) {
    require(in.width() == in.height() && in.width() > 0, "DCT requires a square non-empty block");
    const std::size_t n = in.width();
    const auto& m = dct_basis(n);
    Plane tmp(n, n), out(n, n);
    // tmp = A * in, A = M (forward) or M^T (inverse)
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t c = 0; c < n; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (forward ? m[k * n + i] : m[i * n + k]) * in(i, c);
            tmp(k, c) = s;
        }
    // out = tmp * A^T
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += tmp(r, i) * (forward ? m[k * n + i] : m[i * n + k]);
            out(r, k) = s;
        }
    return out;
}

constexpr std::array<double, 8> kLow = {
    0.23037781330885523, 0.7148465705525415,  0.6308807679295904,   -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278,
};

constexpr std::array<double, 8> make_high() {
    std::array<double, 8> g{};
    for (std::size_t k = 0; k < 8; ++k) g[k] = ((k % 2) ? -1.0 : 1.0) * kLow[7 - k];
    return g;
}
constexpr std::array<double, 8> kHigh = make_high();

void analyze(const double* x, std::size_t n, std::size_t step, double* buf) {
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (std::size_t k = 0; k < 8; ++k) {
            const double v = x[((2 * i + k) % n) * step];
            a += kLow[k] * v;
            d += kHigh[k] * v;
        }
        buf[i] = a;
        buf[half + i] = d;
    }
}

void synthesize(const double* coeffs, std::size_t n, double* out) {
    const std::size_t half = n / 2;
    std::fill(out, out + n, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        const double a = coeffs[i], d = coeffs[half + i];
        for (std::size_t k = 0; k < 8; ++k) out[(2 * i + k) % n] += kLow[k] * a + kHigh[k] * d;
    }
}

}  // namespace

Plane dct2(const Plane& block) { return separable(block, true); }
Plane idct2(const Plane& coeffs) { return separable(coeffs, false); }

void dwt2_level(Plane& p, std::size_t height, std::size_t width) {
    require(height % 2 == 0 && width % 2 == 0 && height <= p.height() && width <= p.width(),
            "wavelet level requires even dimensions");
    std::vector<double> line(std::max(height, width)), buf(std::max(height, width));
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) line[c] = p(r, c);
        analyze(line.data(), width, 1, buf.data());
        for (std::size_t c = 0; c < width; ++c) p(r, c) = buf[c];
    }
    for (std::size_t c = 0; c < width; ++c) {
        for (std::size_t r = 0; r < height; ++r) line[r] = p(r, c);
        analyze(line.data(), height, 1, buf.data());
        for (std::size_t r = 0; r < height; ++r) p(r, c) = buf[r];
    }
}

void idwt2_level(Plane& p, std::size_t height, std::size_t width) {
    require(height % 2 == 0 && width % 2 == 0 && height <= p.height() && width <= p.width(),
            "wavelet level requires even dimensions");
    std::vector<double> line(std::max(height, width)), buf(std::max(height, width));
    for (std::size_t c = 0; c < width; ++c) {
        for (std::size_t r = 0; r < height; ++r) line[r] = p(r, c);
        synthesize(line.data(), height, buf.data());
        for (std::size_t r = 0; r < height; ++r) p(r, c) = buf[r];
    }
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) line[c] = p(r, c);
        synthesize(line.data(), width, buf.data());
        for (std::size_t c = 0; c < width; ++c) p(r, c) = buf[c];
    }
}

Plane circular_autocorrelation(const Plane& p) {
    const int h = static_cast<int>(p.height()), w = static_cast<int>(p.width());
    const int wc = w / 2 + 1;
    std::vector<double> real(p.values().begin(), p.values().end());
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(h) * wc);
    static std::mutex planner_mu;  // the FFTW planner is not thread-safe
    fftw_plan fwd, inv;
    {
        std::lock_guard lock(planner_mu);
        fwd = fftw_plan_dft_r2c_2d(h, w, real.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_2d(h, w, reinterpret_cast<fftw_complex*>(spec.data()), real.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    for (auto& z : spec) z = std::norm(z);
    fftw_execute(inv);
    {
        std::lock_guard lock(planner_mu);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    const double n = static_cast<double>(p.size());
    for (double& v : real) v /= n;
    return Plane(p.width(), p.height(), std::move(real));
}

}  // namespace isoprnu
