#include "etrack/simharness.hpp"

#include "etrack/matvar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace etrack::sim {

namespace {

extent::ExtentState collapse_extents(const std::vector<Estimate>& modes, const std::vector<double>& weights) {
    const Eigen::Index d = modes.front().extent.dim();
    matvar::LogDetMoments mix{Eigen::MatrixXd::Zero(d, d), 0.0};
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (weights[i] == 0.0) {
            continue;
        }
        const matvar::LogDetMoments m = matvar::iw_entropy_moments(modes[i].extent.params());
        mix.e_inv += weights[i] * m.e_inv;
        mix.e_lndet += weights[i] * m.e_lndet;
    }
    return extent::kld_project_to_iw(mix);
}

kinematics::GaussianState collapse_kinematics(const std::vector<Estimate>& modes, const std::vector<double>& weights) {
    const Eigen::Index n = modes.front().kin.dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        mean += weights[i] * modes[i].kin.mean;
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Eigen::VectorXd e = modes[i].kin.mean - mean;
        cov += weights[i] * (modes[i].kin.cov + e * e.transpose());
    }
    return {mean, symmetrize(cov)};
}

}  // namespace

Tracker::Tracker(EstimatorConfig cfg, double dt, correction::SensorModel sensor)
    : cfg_(std::move(cfg)), dt_(dt), sensor_(std::move(sensor)) {
    cfg_.validate();
    sensor_.validate();
}

void Tracker::initialize(const kinematics::GaussianState& kin, const extent::ExtentState& extent) {
    if (kin.dim() != cfg_.state_dim()) {
        throw DomainError(fmt::format("tracker {}: initial state must have dimension {}", cfg_.name, cfg_.state_dim()));
    }
    const std::size_t count = cfg_.kind == EstimatorKind::kBartlettImm ? cfg_.modes.size() : 1;
    modes_.assign(count, Estimate{kin, extent});
    probabilities_.assign(count, 1.0 / static_cast<double>(count));
}

void Tracker::predict() {
    Estimate& est = modes_.front();
    switch (cfg_.kind) {
        case EstimatorKind::kBartlettImm:
            predict_multiple_model();
            return;
        case EstimatorKind::kProposed: {
            const extent::TransitionConfig tc{cfg_.q, extent::ExtentTransform::rotation(dt_), cfg_.v_rule};
            const extent::PredictionOptions opts{cfg_.nu_mode, cfg_.taylor_weight};
            est.extent = extent::predict_proposed(est.extent, est.kin, tc, opts);
            est.kin = kinematics::predict_kinematic(
                est.kin, kinematics::MotionModel::constant_turn(dt_, cfg_.sigma_a, cfg_.sigma_omega));
            return;
        }
        case EstimatorKind::kGranstrom:
            est.extent = extent::predict_granstrom(est.extent, est.kin, extent::ExtentTransform::rotation(dt_),
                                                   cfg_.n, cfg_.taylor_weight);
            est.kin = kinematics::predict_kinematic(
                est.kin, kinematics::MotionModel::constant_turn(dt_, cfg_.sigma_a, cfg_.sigma_omega));
            return;
        case EstimatorKind::kFeldmann:
            est.extent = extent::predict_feldmann(est.extent, dt_, cfg_.tau);
            est.kin = kinematics::predict_kinematic(est.kin,
                                                    kinematics::MotionModel::constant_velocity(dt_, cfg_.q_tilde));
            return;
    }
}

void Tracker::predict_multiple_model() {
    const std::size_t r = modes_.size();
    const double switch_probability = r > 1 ? (1.0 - cfg_.stay_probability) / static_cast<double>(r - 1) : 0.0;
    std::vector<double> predicted(r, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < r; ++i) {
            predicted[j] += (i == j ? cfg_.stay_probability : switch_probability) * probabilities_[i];
        }
    }
    std::vector<Estimate> next;
    next.reserve(r);
    const Eigen::Index d = modes_.front().extent.dim();
    for (std::size_t j = 0; j < r; ++j) {
        std::vector<double> mixing(r, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
            const double pij = i == j ? cfg_.stay_probability : switch_probability;
            mixing[i] = predicted[j] > 0.0 ? pij * probabilities_[i] / predicted[j] : (i == j ? 1.0 : 0.0);
        }
        Estimate mixed{collapse_kinematics(modes_, mixing), collapse_extents(modes_, mixing)};
        const ImmMode& mode = cfg_.modes[j];
        const Eigen::MatrixXd q = extent::resolve_noise(mode.q, mixed.extent.v_mat);
        const double v = extent::v_setting_volume_coupled(mixed.extent.nu, q, mixed.extent.v_mat);
        next.push_back(Estimate{
            kinematics::predict_kinematic(mixed.kin, kinematics::MotionModel::constant_velocity(dt_, mode.q_tilde)),
            extent::predict_bartlett(mixed.extent, Eigen::MatrixXd::Identity(d, d), q, v)});
    }
    modes_ = std::move(next);
    probabilities_ = std::move(predicted);
}

void Tracker::correct(const correction::MeasurementSet& meas) {
    if (cfg_.kind == EstimatorKind::kBartlettImm) {
        correct_multiple_model(meas);
        return;
    }
    auto res = correction::correct(modes_.front().kin, modes_.front().extent, meas, sensor_);
    modes_.front() = Estimate{std::move(res.kin), std::move(res.extent)};
}

void Tracker::correct_multiple_model(const correction::MeasurementSet& meas) {
    const std::size_t r = modes_.size();
    std::vector<double> log_weights(r, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < r; ++j) {
        if (probabilities_[j] > 0.0) {
            log_weights[j] = std::log(probabilities_[j]) +
                             correction::log_likelihood(modes_[j].kin, modes_[j].extent, meas, sensor_);
        }
        auto res = correction::correct(modes_[j].kin, modes_[j].extent, meas, sensor_);
        modes_[j] = Estimate{std::move(res.kin), std::move(res.extent)};
    }
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    for (std::size_t j = 0; j < r; ++j) {
        probabilities_[j] = std::exp(log_weights[j] - top);
        total += probabilities_[j];
    }
    for (double& p : probabilities_) {
        p /= total;
    }
}

Estimate Tracker::estimate() const {
    if (modes_.size() == 1) {
        return modes_.front();
    }
    return {collapse_kinematics(modes_, probabilities_), collapse_extents(modes_, probabilities_)};
}

}  // namespace etrack::sim
