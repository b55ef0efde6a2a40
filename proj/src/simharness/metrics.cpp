#include "etrack/simharness.hpp"

#include "etrack/matvar.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace etrack::sim {

double gw_distance(const Eigen::VectorXd& truth_position, const Eigen::MatrixXd& truth_extent,
                   const kinematics::GaussianState& kin, const extent::ExtentState& extent) {
    const Eigen::Index d = truth_extent.rows();
    if (truth_position.size() != d || extent.dim() != d || kin.dim() < d) {
        throw DomainError("gw_distance: dimension mismatch");
    }
    const SpdMatrix x(truth_extent);
    const SpdMatrix x_bar(extent.expected());
    const Eigen::MatrixXd x_root = sym_sqrt(x).matrix();
    const SpdMatrix cross(x_root * x_bar.matrix() * x_root);
    const double shape = (x.matrix() + x_bar.matrix() - 2.0 * sym_sqrt(cross).matrix()).trace();
    const double offset = (kin.mean.head(d) - truth_position).squaredNorm();
    return std::sqrt(std::max(0.0, shape + offset));
}

double nees_kinematic(const kinematics::GaussianState& kin, const Eigen::VectorXd& truth) {
    if (truth.size() != kin.dim()) {
        throw DomainError("nees_kinematic: dimension mismatch");
    }
    const SpdMatrix p(kin.cov);
    const Eigen::VectorXd e = kin.mean - truth;
    const Eigen::VectorXd w = p.solve(e);
    return e.dot(w) / static_cast<double>(kin.dim());
}

double nees_extent(const extent::ExtentState& extent, const Eigen::MatrixXd& truth_extent) {
    const Eigen::MatrixXd diff = extent.expected() - truth_extent;
    const double e = matvar::iw_elementwise_variance(extent.params()).sum();
    return (diff * diff).trace() / e;
}

}  // namespace etrack::sim
