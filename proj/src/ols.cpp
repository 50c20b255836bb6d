#include "isoprnu/ols.hpp"

#include <cmath>
#include <sstream>

#include "isoprnu/error.hpp"

namespace isoprnu {

OlsSolution solve_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
    require(design.rows() == target.size(), "OLS: design and target lengths differ");
    if (design.rows() < design.cols())
        fail(ErrorKind::SingularFit, "OLS: fewer observations than coefficients");
    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::VectorXd moment = design.transpose() * target;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxCondition) {
        std::ostringstream os;
        os << "normal equations are singular or ill-conditioned (condition " << (lo > 0.0 ? hi / lo : INFINITY)
           << ")";
        fail(ErrorKind::SingularFit, os.str());
    }
    OlsSolution out;
    out.coef = gram.ldlt().solve(moment);
    // one refinement step against the normal equations
    out.coef += gram.ldlt().solve(moment - gram * out.coef);
    const Eigen::VectorXd resid = target - design * out.coef;
    out.rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(target.size()));
    return out;
}

}  // namespace isoprnu
