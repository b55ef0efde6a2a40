#pragma once

#include "etrack/extent.hpp"
#include "etrack/kinematics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace etrack::correction {

struct MeasurementSet {
    std::vector<Eigen::VectorXd> points;

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool empty() const { return points.empty(); }
};

/// Linear position sensor with additive noise R and spread factor lambda.
struct SensorModel {
    Eigen::MatrixXd h;
    Eigen::MatrixXd r;
    double lambda = 0.25;

    void validate() const;
};

/// Centroid and scatter matrix sum_i (z_i - z_bar)(z_i - z_bar)^T.
struct MeasurementStatistics {
    Eigen::VectorXd mean;
    Eigen::MatrixXd scatter;
    std::size_t count = 0;
};

[[nodiscard]] MeasurementStatistics summarize(const MeasurementSet& meas, Eigen::Index d);

struct CorrectionResult {
    kinematics::GaussianState kin;
    extent::ExtentState extent;
};

/// Random-matrix measurement update with separate kinematic and extent innovations.
/// An empty measurement set returns the inputs unchanged.
[[nodiscard]] CorrectionResult correct(const kinematics::GaussianState& kin, const extent::ExtentState& extent,
                                       const MeasurementSet& meas, const SensorModel& sensor);

/// Log predictive likelihood of a measurement set: the centroid term N(z_bar; H m, S) plus,
/// when the scatter matrix has at least d degrees of freedom, the Wishart term W(Z_bar | m - 1, Y).
[[nodiscard]] double log_likelihood(const kinematics::GaussianState& kin, const extent::ExtentState& extent,
                                    const MeasurementSet& meas, const SensorModel& sensor);

}  // namespace etrack::correction
