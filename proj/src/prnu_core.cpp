#include "isoprnu/prnu_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "isoprnu/error.hpp"
#include "isoprnu/format.hpp"
#include "isoprnu/parallel.hpp"
#include "isoprnu/transforms.hpp"

namespace isoprnu {

namespace {

constexpr std::size_t kLevels = 4;

std::size_t reflect(std::size_t i, std::size_t n) { return i < n ? i : 2 * n - 1 - i; }

// Local Wiener shrinkage of one subband occupying rows [r0, r0+h) and cols [c0, c0+w).
void wiener_subband(Plane& p, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w, double noise_var) {
    const Plane band = p.crop(r0, c0, h, w);
    const IntegralImage energy(band, [](double x) { return x * x; });
    parallel_for(h, [&](std::size_t r) {
        for (std::size_t c = 0; c < w; ++c) {
            double local = std::numeric_limits<double>::infinity();
            for (std::size_t half : {1u, 2u, 3u, 4u}) {
                const std::size_t ra = r >= half ? r - half : 0, rb = std::min(h, r + half + 1);
                const std::size_t ca = c >= half ? c - half : 0, cb = std::min(w, c + half + 1);
                const double m = energy.sum(ra, ca, rb, cb) / static_cast<double>((rb - ra) * (cb - ca));
                local = std::min(local, std::max(0.0, m - noise_var));
            }
            const double coef = band(r, c);
            p(r0 + r, c0 + c) = local > 0.0 ? coef * local / (local + noise_var) : 0.0;
        }
    });
}

void require_same_shape(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b)) fail(ErrorKind::InvalidParameter, std::string(what) + ": dimensions differ");
}

}  // namespace

Plane denoise(const Plane& plane, double sigma0) {
    require(sigma0 > 0.0, "sigma0 must be positive");
    require(plane.width() >= 16 && plane.height() >= 16, "denoise needs a plane of at least 16x16");
    constexpr std::size_t align = std::size_t{1} << kLevels;
    const std::size_t h = (plane.height() + align - 1) / align * align;
    const std::size_t w = (plane.width() + align - 1) / align * align;
    Plane work(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            work(r, c) = plane(reflect(r, plane.height()), reflect(c, plane.width()));

    for (std::size_t l = 0, lh = h, lw = w; l < kLevels; ++l, lh /= 2, lw /= 2) dwt2_level(work, lh, lw);
    const double noise_var = sigma0 * sigma0;
    for (std::size_t l = 0, lh = h, lw = w; l < kLevels; ++l, lh /= 2, lw /= 2) {
        const std::size_t hh = lh / 2, hw = lw / 2;
        wiener_subband(work, 0, hw, hh, hw, noise_var);
        wiener_subband(work, hh, 0, hh, hw, noise_var);
        wiener_subband(work, hh, hw, hh, hw, noise_var);
    }
    for (std::size_t l = kLevels; l-- > 0;) idwt2_level(work, h >> l, w >> l);
    return work.crop(0, 0, plane.height(), plane.width());
}

Residual residual(const Plane& plane, double sigma0) {
    const Plane den = denoise(plane, sigma0);
    Residual res{plane, false, std::nullopt};
    for (std::size_t i = 0; i < plane.size(); ++i) res.values[i] -= den[i];
    return res;
}

Residual standardize(const Residual& res, bool zero_mean_rows_cols) {
    Residual out = res;
    Plane& v = out.values;
    const std::size_t w = v.width(), h = v.height();
    if (v.empty()) fail(ErrorKind::DegenerateInput, "cannot standardize an empty residual");
    if (zero_mean_rows_cols) {
        for (std::size_t r = 0; r < h; ++r) {
            const double m = mean(v.row(r));
            for (std::size_t c = 0; c < w; ++c) v(r, c) -= m;
        }
        std::vector<double> col_mean(w, 0.0);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) col_mean[c] += v(r, c);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) v(r, c) -= col_mean[c] / static_cast<double>(h);
    }
    double scale = 0.0;
    for (double x : res.values.values()) scale = std::max(scale, std::abs(x));
    const double m = mean(v), sd = std::sqrt(variance(v));
    if (!(sd > 1e-12 * scale) || sd == 0.0) fail(ErrorKind::DegenerateInput, "residual has zero variance");
    for (double& x : v.values()) x = (x - m) / sd;
    out.standardized = true;
    return out;
}

namespace {

std::optional<double> common_iso(const std::vector<Residual>& residuals) {
    std::optional<double> iso = residuals.front().source_iso;
    for (const auto& r : residuals)
        if (r.source_iso != iso) return std::nullopt;
    return iso;
}

}  // namespace

Fingerprint estimate_fingerprint(const std::vector<Residual>& residuals, bool zero_mean_rows_cols) {
    require(!residuals.empty(), "fingerprint needs at least one residual");
    Plane acc(residuals.front().values.width(), residuals.front().values.height());
    for (const auto& r : residuals) {
        require_same_shape(acc, r.values, "estimate_fingerprint");
        const Residual s = r.standardized ? r : standardize(r, false);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s.values[i];
    }
    for (double& x : acc.values()) x /= static_cast<double>(residuals.size());
    Residual avg{std::move(acc), false, std::nullopt};
    return Fingerprint{standardize(avg, zero_mean_rows_cols).values, residuals.size(), common_iso(residuals)};
}

Fingerprint estimate_fingerprint_ml(const std::vector<Plane>& images, const std::vector<Residual>& residuals,
                                    bool zero_mean_rows_cols) {
    require(!residuals.empty() && images.size() == residuals.size(),
            "ML fingerprint needs one image per residual");
    const Plane& first = residuals.front().values;
    Plane num(first.width(), first.height()), den(first.width(), first.height());
    for (std::size_t k = 0; k < images.size(); ++k) {
        require_same_shape(first, images[k], "estimate_fingerprint_ml");
        require_same_shape(first, residuals[k].values, "estimate_fingerprint_ml");
        for (std::size_t i = 0; i < num.size(); ++i) {
            num[i] += images[k][i] * residuals[k].values[i];
            den[i] += images[k][i] * images[k][i];
        }
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] = den[i] > 0.0 ? num[i] / den[i] : 0.0;
    Residual est{std::move(num), false, std::nullopt};
    return Fingerprint{standardize(est, zero_mean_rows_cols).values, residuals.size(), common_iso(residuals)};
}

CorrelationMap block_corr_map(const Plane& a, const Plane& b, std::size_t block, std::size_t stride) {
    require_same_shape(a, b, "block_corr_map");
    require(block >= 2 && block <= std::min(a.width(), a.height()), "block must fit inside the plane");
    require(stride >= 1, "stride must be positive");
    CorrelationMap map;
    map.block = block;
    map.stride = stride;
    map.image_width = a.width();
    map.image_height = a.height();
    map.rows = (a.height() - block) / stride + 1;
    map.cols = (a.width() - block) / stride + 1;
    map.rho.assign(map.rows * map.cols, 0.0);
    map.degenerate.assign(map.rho.size(), 0);

    const IntegralImage sa(a), sb(b);
    const IntegralImage saa(a, [](double x) { return x * x; }), sbb(b, [](double x) { return x * x; });
    Plane prod = a;
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= b[i];
    const IntegralImage sab(prod);
    const double n = static_cast<double>(block * block);

    parallel_for(map.rows, [&](std::size_t r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            const std::size_t r0 = r * stride, c0 = c * stride, r1 = r0 + block, c1 = c0 + block;
            const double ma = sa.sum(r0, c0, r1, c1), mb = sb.sum(r0, c0, r1, c1);
            const double qa = saa.sum(r0, c0, r1, c1), qb = sbb.sum(r0, c0, r1, c1);
            const double va = qa - ma * ma / n, vb = qb - mb * mb / n;
            const double cov = sab.sum(r0, c0, r1, c1) - ma * mb / n;
            const std::size_t k = r * map.cols + c;
            if (!(va > 1e-12 * qa) || !(vb > 1e-12 * qb)) {
                map.degenerate[k] = 1;
                continue;
            }
            map.rho[k] = std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
        }
    });
    return map;
}

double map_mean(const CorrelationMap& map) { return mean(map.rho); }

Plane autocorrelation(const Residual& res) {
    Plane centered = res.values;
    const double m = mean(centered);
    for (double& x : centered.values()) x -= m;
    Plane ac = circular_autocorrelation(centered);
    const double zero = ac[0];
    if (!(zero > 0.0)) fail(ErrorKind::DegenerateInput, "autocorrelation of a zero-variance residual");
    for (double& x : ac.values()) x /= zero;
    ac[0] = 1.0;
    return ac;
}

std::size_t spreading_radius(const Plane& ac, double tau) {
    const std::size_t h = ac.height(), w = ac.width();
    std::size_t radius = 0;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            if (r == 0 && c == 0) continue;
            if (std::abs(ac(r, c)) <= tau) continue;
            const std::size_t lag = std::max(std::min(r, h - r), std::min(c, w - c));
            radius = std::max(radius, lag);
        }
    return radius;
}

Plane center_lags(const Plane& ac) {
    const std::size_t h = ac.height(), w = ac.width();
    Plane out(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out((r + h / 2) % h, (c + w / 2) % w) = ac(r, c);
    return out;
}

// File formats --------------------------------------------------------------

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::string& path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        fail(ErrorKind::Io, "truncated fingerprint file '" + path + "'");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void write_fingerprint(const std::string& path, const Fingerprint& fp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out.write("PRNU", 4);
    put_le<std::uint8_t>(out, 1);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fp.values.width()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fp.values.height()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fp.n_images));
    put_le<double>(out, fp.iso_label.value_or(std::numeric_limits<double>::quiet_NaN()));
    for (double v : fp.values.values()) put_le<float>(out, static_cast<float>(v));
}

Fingerprint read_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "PRNU", 4) != 0)
        fail(ErrorKind::Io, "'" + path + "' is not a fingerprint file");
    if (get_le<std::uint8_t>(in, path) != 1) fail(ErrorKind::Io, "unsupported fingerprint version in '" + path + "'");
    const auto w = get_le<std::uint32_t>(in, path), h = get_le<std::uint32_t>(in, path);
    Fingerprint fp;
    fp.n_images = get_le<std::uint32_t>(in, path);
    const double iso = get_le<double>(in, path);
    if (!std::isnan(iso)) fp.iso_label = iso;
    fp.values = Plane(w, h);
    for (double& v : fp.values.values()) v = get_le<float>(in, path);
    return fp;
}

std::string corr_map_csv(const CorrelationMap& map) {
    std::ostringstream os;
    os << "row,col,rho\n";
    for (std::size_t r = 0; r < map.rows; ++r)
        for (std::size_t c = 0; c < map.cols; ++c) os << r << ',' << c << ',' << format_sig(map.at(r, c)) << '\n';
    return os.str();
}

Plane corr_map_heatmap(const CorrelationMap& map) {
    constexpr double lo = -0.05;
    double hi = lo;
    for (double v : map.rho) hi = std::max(hi, v);
    Plane out(map.cols, map.rows);
    for (std::size_t i = 0; i < map.rho.size(); ++i)
        out[i] = hi > lo ? std::clamp((map.rho[i] - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    return out;
}

}  // namespace isoprnu
