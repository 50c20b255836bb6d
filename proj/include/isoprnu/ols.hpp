#pragma once

#include <Eigen/Dense>

namespace isoprnu {

/// Relative condition-number limit on the normal-equations matrix X^T X.
inline constexpr double kMaxCondition = 1e12;

struct OlsSolution {
    Eigen::VectorXd coef;
    double rmse = 0.0;
};

/// Ordinary least squares via the normal equations. Throws singular-fit when X^T X is
/// rank deficient or its condition number exceeds kMaxCondition.
OlsSolution solve_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& target);

}  // namespace isoprnu
