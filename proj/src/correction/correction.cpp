#include "etrack/correction.hpp"

#include "etrack/matvar.hpp"
#include "etrack/spd_matrix.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace etrack::correction {

namespace {

struct Innovation {
    MeasurementStatistics stats;
    Eigen::MatrixXd x_hat;
    SpdMatrix y;
    SpdMatrix s;
    Eigen::VectorXd residual;
};

Innovation innovation(const kinematics::GaussianState& kin, const extent::ExtentState& extent,
                      const MeasurementSet& meas, const SensorModel& sensor) {
    sensor.validate();
    const Eigen::Index d = extent.dim();
    if (sensor.h.rows() != d || sensor.h.cols() != kin.dim()) {
        throw DomainError(fmt::format("correct: observation matrix must be {}x{}", d, kin.dim()));
    }
    extent::require_predictable(extent, "correct");
    MeasurementStatistics stats = summarize(meas, d);
    const Eigen::MatrixXd x_hat = extent.expected();
    SpdMatrix y(sensor.lambda * x_hat + sensor.r);
    const double m = static_cast<double>(stats.count);
    const Eigen::MatrixXd hph = sensor.h * kin.cov * sensor.h.transpose();
    SpdMatrix s(hph + y.matrix() / m);
    Eigen::VectorXd residual = stats.mean - sensor.h * kin.mean;
    return {std::move(stats), x_hat, std::move(y), std::move(s), std::move(residual)};
}

}  // namespace

void SensorModel::validate() const {
    if (r.rows() != h.rows() || r.cols() != h.rows()) {
        throw DomainError("sensor model: R must be d x d with d the row count of H");
    }
    if (!is_positive_semidefinite(r)) {
        throw NotSpdError("sensor model: R must be positive semidefinite", 0);
    }
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw DomainError(fmt::format("sensor model: lambda must lie in (0, 1], got {}", lambda));
    }
}

MeasurementStatistics summarize(const MeasurementSet& meas, Eigen::Index d) {
    MeasurementStatistics out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), meas.size()};
    if (meas.empty()) {
        return out;
    }
    for (const auto& z : meas.points) {
        if (z.size() != d || !z.allFinite()) {
            throw DomainError(fmt::format("measurement must be a finite {}-vector", d));
        }
        out.mean += z;
    }
    out.mean /= static_cast<double>(meas.size());
    for (const auto& z : meas.points) {
        const Eigen::VectorXd e = z - out.mean;
        out.scatter.noalias() += e * e.transpose();
    }
    out.scatter = symmetrize(out.scatter);
    return out;
}

CorrectionResult correct(const kinematics::GaussianState& kin, const extent::ExtentState& extent,
                         const MeasurementSet& meas, const SensorModel& sensor) {
    if (meas.empty()) {
        return {kin, extent};
    }
    const Innovation in = innovation(kin, extent, meas, sensor);
    const Eigen::MatrixXd pht = kin.cov * sensor.h.transpose();
    const Eigen::MatrixXd gain = in.s.solve(pht.transpose()).transpose();

    kinematics::GaussianState kin_next;
    kin_next.mean = kin.mean + gain * in.residual;
    kin_next.cov = symmetrize(kin.cov - gain * in.s.matrix() * gain.transpose());

    const SpdMatrix x_hat(in.x_hat);
    const Eigen::MatrixXd x_root = sym_sqrt(x_hat).matrix();
    const Eigen::MatrixXd s_inv_root = sym_inv_sqrt(in.s).matrix();
    const Eigen::MatrixXd y_inv_root = sym_inv_sqrt(in.y).matrix();
    const Eigen::MatrixXd n_half = x_root * s_inv_root * in.residual;
    const Eigen::MatrixXd n_hat = n_half * n_half.transpose();
    const Eigen::MatrixXd y_map = x_root * y_inv_root;
    const Eigen::MatrixXd y_hat = y_map * in.stats.scatter * y_map.transpose();

    extent::ExtentState extent_next{extent.nu + static_cast<double>(in.stats.count),
                                    SpdMatrix(extent.v_mat.matrix() + n_hat + y_hat)};
    return {std::move(kin_next), std::move(extent_next)};
}

double log_likelihood(const kinematics::GaussianState& kin, const extent::ExtentState& extent,
                      const MeasurementSet& meas, const SensorModel& sensor) {
    if (meas.empty()) {
        return 0.0;
    }
    const Innovation in = innovation(kin, extent, meas, sensor);
    const auto d = static_cast<double>(extent.dim());
    const Eigen::VectorXd whitened = in.s.solve(in.residual);
    const double maha = in.residual.dot(whitened);
    double out = -0.5 * (d * std::log(2.0 * std::numbers::pi) + in.s.logdet() + maha);
    const double dof = static_cast<double>(in.stats.count) - 1.0;
    if (dof >= d) {
        const SpdMatrix scatter(in.stats.scatter);
        out += matvar::wishart_logpdf(scatter, {dof, in.y});
    }
    return out;
}

}  // namespace etrack::correction
