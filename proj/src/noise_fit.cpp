#include "isoprnu/noise_fit.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>

#include "isoprnu/error.hpp"
#include "isoprnu/format.hpp"
#include "isoprnu/ols.hpp"
#include "isoprnu/parallel.hpp"

namespace isoprnu {

std::vector<StatPoint> estimate_block_stats(const Plane& plane, std::size_t block) {
    require(block >= 16, "block size must be at least 16");
    require(plane.width() >= block && plane.height() >= block, "plane is smaller than one block");
    const std::size_t nby = plane.height() / block, nbx = plane.width() / block;
    const double n = static_cast<double>(block * block);
    // centered coordinates make the intercept and the two slopes orthogonal
    const double center = (static_cast<double>(block) - 1.0) / 2.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < block; ++i) sxx += (i - center) * (i - center);
    sxx *= static_cast<double>(block);

    std::vector<std::optional<StatPoint>> slots(nby * nbx);
    parallel_for(slots.size(), [&](std::size_t idx) {
        const std::size_t r0 = (idx / nbx) * block, c0 = (idx % nbx) * block;
        double sum = 0.0, sx = 0.0, sy = 0.0;
        bool constant = true;
        for (std::size_t r = 0; r < block; ++r)
            for (std::size_t c = 0; c < block; ++c) {
                const double v = plane(r0 + r, c0 + c);
                constant = constant && v == plane(r0, c0);
                sum += v;
                sx += (c - center) * v;
                sy += (r - center) * v;
            }
        const double mu = sum / n, bx = sx / sxx, by = sy / sxx;
        const double range = (std::abs(bx) + std::abs(by)) * (static_cast<double>(block) - 1.0);
        if (range > kFlatnessThreshold) return;
        if (constant) {
            slots[idx] = StatPoint{std::clamp(plane(r0, c0), 0.0, 1.0), 0.0, r0, c0, block};
            return;
        }
        double ssr = 0.0;
        for (std::size_t r = 0; r < block; ++r)
            for (std::size_t c = 0; c < block; ++c) {
                const double e = plane(r0 + r, c0 + c) - (mu + bx * (c - center) + by * (r - center));
                ssr += e * e;
            }
        slots[idx] = StatPoint{std::clamp(mu, 0.0, 1.0), ssr / (n - 3.0), r0, c0, block};
    });
    std::vector<StatPoint> out;
    for (auto& s : slots)
        if (s) out.push_back(*s);
    if (out.empty()) fail(ErrorKind::EmptyResult, "no block passed the flatness test");
    return out;
}

namespace {

std::size_t distinct_phi(const std::vector<StatPoint>& points) {
    std::set<double> seen;
    for (const auto& p : points) seen.insert(p.phi_hat);
    return seen.size();
}

}  // namespace

QuadraticFit fit_quadratic(const std::vector<StatPoint>& points) {
    if (points.size() < 3 || distinct_phi(points) < 3)
        fail(ErrorKind::SingularFit, "quadratic fit needs at least 3 distinct intensities");
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd x(m, 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double phi = points[i].phi_hat;
        x(i, 0) = phi * phi;
        x(i, 1) = phi;
        x(i, 2) = 1.0;
        y(i) = points[i].var_hat;
    }
    const auto sol = solve_ols(x, y);
    return {sol.coef(0), sol.coef(1), sol.coef(2), sol.rmse, points.size()};
}

QuadraticFit fit_quadratic_fixed_A(const std::vector<StatPoint>& points, double A) {
    if (points.size() < 2 || distinct_phi(points) < 2)
        fail(ErrorKind::SingularFit, "fixed-A fit needs at least 2 distinct intensities");
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd x(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double phi = points[i].phi_hat;
        x(i, 0) = phi;
        x(i, 1) = 1.0;
        y(i) = points[i].var_hat - A * phi * phi;
    }
    const auto sol = solve_ols(x, y);
    return {A, sol.coef(0), sol.coef(1), sol.rmse, points.size()};
}

double gain_slope(const std::vector<std::pair<double, double>>& iso_b_pairs) {
    require(iso_b_pairs.size() >= 2, "gain slope needs at least 2 (iso, B) pairs");
    const auto m = static_cast<Eigen::Index>(iso_b_pairs.size());
    Eigen::MatrixXd x(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [iso, b] = iso_b_pairs[i];
        require(iso > 0.0 && b > 0.0, "gain slope requires positive ISO and B values");
        x(i, 0) = std::log(iso);
        x(i, 1) = 1.0;
        y(i) = std::log(b);
    }
    // center log(iso) so the shift invariance holds to rounding
    const double mx = x.col(0).mean();
    x.col(0).array() -= mx;
    return solve_ols(x, y).coef(0);
}

std::string stat_points_csv(const std::vector<StatPoint>& points) {
    std::ostringstream os;
    os << "phi,var,block_row,block_col\n";
    for (const auto& p : points)
        os << format_sig(p.phi_hat) << ',' << format_sig(p.var_hat) << ',' << p.block_row << ',' << p.block_col
           << '\n';
    return os.str();
}

std::string quadratic_fit_csv(const QuadraticFit& fit) {
    std::ostringstream os;
    os << "A,B,C,rmse,n\n"
       << format_sig(fit.A) << ',' << format_sig(fit.B) << ',' << format_sig(fit.C) << ','
       << format_sig(fit.rmse) << ',' << fit.n_points << '\n';
    return os.str();
}

}  // namespace isoprnu
