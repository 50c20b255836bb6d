#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "isoprnu/plane.hpp"

namespace isoprnu {

/// One flat block's (intensity, residual variance) estimate.
struct StatPoint {
    double phi_hat = 0.0;
    double var_hat = 0.0;
    std::size_t block_row = 0;
    std::size_t block_col = 0;
    std::size_t block_size = 0;
};

/// var = A phi^2 + B phi + C, with A ~ sigma_k^2, B ~ g, C ~ g^2 s^2 - g^2 p0.
struct QuadraticFit {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double rmse = 0.0;
    std::size_t n_points = 0;

    double operator()(double phi) const noexcept { return (A * phi + B) * phi + C; }
};

/// Blocks whose planar trend spans more than this (full scale = 1) are discarded.
inline constexpr double kFlatnessThreshold = 0.02;

/// Per non-overlapping block: mean and detrended residual variance (planar least-squares
/// trend, unbiased for the three fitted parameters). Sorted by block origin.
std::vector<StatPoint> estimate_block_stats(const Plane& plane, std::size_t block);

QuadraticFit fit_quadratic(const std::vector<StatPoint>& points);
QuadraticFit fit_quadratic_fixed_A(const std::vector<StatPoint>& points, double A);

/// OLS slope of log(B) against log(iso).
double gain_slope(const std::vector<std::pair<double, double>>& iso_b_pairs);

std::string stat_points_csv(const std::vector<StatPoint>& points);
std::string quadratic_fit_csv(const QuadraticFit& fit);

}  // namespace isoprnu
