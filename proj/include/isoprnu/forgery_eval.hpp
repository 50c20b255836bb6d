#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "isoprnu/plane.hpp"
#include "isoprnu/prnu_core.hpp"

namespace isoprnu {

/// A square region whose centre is replaced by a donor patch from elsewhere in the image.
struct ForgerySpec {
    std::size_t region = 1024;
    std::size_t patch = 256;
    std::size_t region_row = 0;  // region top-left
    std::size_t region_col = 0;
    std::size_t donor_row = 0;   // donor patch top-left
    std::size_t donor_col = 0;

    std::size_t target_row() const noexcept { return region_row + (region - patch) / 2; }
    std::size_t target_col() const noexcept { return region_col + (region - patch) / 2; }
};

struct Forgery {
    Plane forged;
    Plane truth;  // 1 on replaced pixels, 0 elsewhere
};

/// Throws invalid-spec when the patch does not fit, is not smaller than the region,
/// or the donor rectangle overlaps the target rectangle.
Forgery make_forgery(const Plane& image, const ForgerySpec& spec);

struct DetectorParams {
    double beta = 10.0;
    double p0 = 0.01;
    std::optional<double> sigma0;  // tampered-block correlation std; default 1/block
    std::optional<double> sigma1;  // authentic-block correlation std; default 2 sigma0
    std::size_t max_icm_iters = 50;

    double resolved_sigma0(std::size_t block) const;
    double resolved_sigma1(std::size_t block) const;
};

/// Block labels (1 = tampered) plus the energy after initialisation and after each ICM sweep.
struct BlockDetection {
    std::vector<std::uint8_t> labels;
    std::vector<double> energy;
};

/// Per-block unary costs of the authentic and tampered labels (negative log posterior terms).
std::pair<double, double> unary_costs(double rho, double rho_hat, double sigma0, double sigma1, double p0);

BlockDetection detect_blocks(const CorrelationMap& map, const CorrelationMap& predicted, const DetectorParams& params);

/// Pixels painted by majority vote of the covering blocks; uncovered pixels stay authentic.
Plane rasterize_labels(const CorrelationMap& grid, const std::vector<std::uint8_t>& labels);

Plane detect(const CorrelationMap& map, const CorrelationMap& predicted, const DetectorParams& params);

struct PixelRates {
    double tpr = 0.0;
    double fpr = 0.0;
};
PixelRates pixel_metrics(const Plane& mask, const Plane& truth);

struct PixelCounts {
    double tp = 0, fp = 0, pos = 0, neg = 0;
    PixelRates rates() const { return {pos > 0 ? tp / pos : 0.0, neg > 0 ? fp / neg : 0.0}; }
    PixelCounts& operator+=(const PixelCounts& o) {
        tp += o.tp, fp += o.fp, pos += o.pos, neg += o.neg;
        return *this;
    }
};

/// Scores block labels against a truth mask without painting the full mask: pixels sharing
/// the same covering blocks are grouped into cells once, at construction.
class BlockScorer {
public:
    BlockScorer(const CorrelationMap& grid, const Plane& truth);
    PixelCounts score(const std::vector<std::uint8_t>& labels) const;

private:
    std::size_t n_blocks_ = 0;
    std::vector<std::vector<std::uint32_t>> cover_;  // covering blocks per cell
    std::vector<double> cell_pos_, cell_neg_;
    PixelCounts uncovered_;
};

struct RocRun {
    double beta = 0.0;
    double p0 = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Upper-left Pareto front sorted by fpr (strictly increasing), limited to fpr <= max_fpr.
std::vector<RocRun> roc_envelope(const std::vector<RocRun>& runs, double max_fpr = 0.2);

/// Envelope TPR at fpr, linear between front points, starting from (0, 0) and held flat past the last point.
double envelope_tpr(const std::vector<RocRun>& envelope, double fpr);

/// Largest pointwise shortfall of a below b over an evenly spaced grid on (0, max_fpr]. The point
/// fpr = 0 is left out: its value only says whether the sweep happened to land a run with no false positives.
double envelope_shortfall(const std::vector<RocRun>& a, const std::vector<RocRun>& b, double max_fpr = 0.2,
                          std::size_t grid = 200);
inline bool envelope_dominates(const std::vector<RocRun>& a, const std::vector<RocRun>& b, double max_fpr = 0.2) {
    return envelope_shortfall(a, b, max_fpr) <= 1e-12;
}

/// Default (beta, p0) grid for ROC sweeps.
std::vector<std::pair<double, double>> default_roc_grid();

std::string roc_csv(const std::vector<RocRun>& runs);

/// Grey image with true detections green, false detections red and misses white.
void write_overlay(const std::string& path, const Plane& image, const Plane& mask, const Plane& truth);
/// 8-bit 0/255 mask.
void write_mask(const std::string& path, const Plane& mask);

}  // namespace isoprnu
