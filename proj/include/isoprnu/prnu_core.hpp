#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isoprnu/plane.hpp"

namespace isoprnu {

/// Default denoiser noise level: 3 grey levels on the 0-255 scale.
inline constexpr double kDefaultSigma0 = 3.0 / 255.0;

struct Residual {
    Plane values;
    bool standardized = false;
    std::optional<double> source_iso;
};

struct Fingerprint {
    Plane values;
    std::size_t n_images = 0;
    std::optional<double> iso_label;
};

/// Block-wise Pearson correlations between a residual and a fingerprint.
struct CorrelationMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t block = 0;
    std::size_t stride = 0;
    std::size_t origin_offset = 0;
    std::size_t image_width = 0;
    std::size_t image_height = 0;
    std::vector<double> rho;
    /// Entries whose block had zero variance in either input (rho forced to 0).
    std::vector<std::uint8_t> degenerate;

    double& at(std::size_t r, std::size_t c) { return rho[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return rho[r * cols + c]; }
    std::size_t block_row0(std::size_t r) const { return origin_offset + r * stride; }
    std::size_t block_col0(std::size_t c) const { return origin_offset + c * stride; }
};

/// 4-level periodic Daubechies-8 wavelet decomposition with local Wiener shrinkage of
/// every detail subband (minimum of the 3/5/7/9 window variance estimates).
Plane denoise(const Plane& plane, double sigma0 = kDefaultSigma0);

Residual residual(const Plane& plane, double sigma0 = kDefaultSigma0);

/// Optional row/column mean removal followed by global zero-mean, unit-variance scaling.
Residual standardize(const Residual& res, bool zero_mean_rows_cols = false);

enum class FingerprintMode { Average, MaxLikelihood };

/// Pixel-wise mean of standardized residuals, re-standardized.
Fingerprint estimate_fingerprint(const std::vector<Residual>& residuals, bool zero_mean_rows_cols = true);
/// sum(I_i R_i) / sum(I_i^2), re-standardized.
Fingerprint estimate_fingerprint_ml(const std::vector<Plane>& images, const std::vector<Residual>& residuals,
                                    bool zero_mean_rows_cols = true);

CorrelationMap block_corr_map(const Plane& a, const Plane& b, std::size_t block, std::size_t stride);
inline CorrelationMap block_corr_map(const Residual& res, const Fingerprint& fp, std::size_t block,
                                     std::size_t stride) {
    return block_corr_map(res.values, fp.values, block, stride);
}
double map_mean(const CorrelationMap& map);

/// Normalized circular autocorrelation; lag (0,0) sits at index (0,0) and equals 1.
Plane autocorrelation(const Residual& res);
/// Largest Chebyshev lag, excluding (0,0), where |ac| exceeds tau.
std::size_t spreading_radius(const Plane& ac, double tau);
/// Rolls lag (0,0) to the plane center for display.
Plane center_lags(const Plane& ac);

// File formats --------------------------------------------------------------

/// "PRNU", version 1, LE u32 width/height/n_images, LE f64 ISO (NaN = none), LE f32 samples.
void write_fingerprint(const std::string& path, const Fingerprint& fp);
Fingerprint read_fingerprint(const std::string& path);

std::string corr_map_csv(const CorrelationMap& map);
/// 8-bit heatmap, rho mapped linearly from [-0.05, max rho] to [0, 255].
Plane corr_map_heatmap(const CorrelationMap& map);

}  // namespace isoprnu
