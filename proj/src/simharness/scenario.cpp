#include "etrack/simharness.hpp"

#include "etrack/extent.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace etrack::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Matrix2d oriented_extent(double heading, double major_diameter, double minor_diameter) {
    const Eigen::Matrix2d rot = extent::rotation_matrix(heading);
    const double a = 0.5 * major_diameter;
    const double b = 0.5 * minor_diameter;
    return symmetrize(rot * Eigen::Vector2d(a * a, b * b).asDiagonal() * rot.transpose());
}

}  // namespace

Eigen::VectorXd TruthStep::kinematic(Eigen::Index state_dim) const {
    Eigen::VectorXd x(state_dim);
    x.head<2>() = position;
    x.segment<2>(2) = velocity;
    if (state_dim == 5) {
        x(4) = turn_rate;
    }
    return x;
}

void EstimatorConfig::validate() const {
    if (name.empty()) {
        throw DomainError("estimator: name must not be empty");
    }
    if (sigma_a < 0.0 || sigma_omega < 0.0 || q_tilde < 0.0) {
        throw DomainError(fmt::format("estimator {}: noise parameters must be >= 0", name));
    }
    switch (kind) {
        case EstimatorKind::kBartlettImm:
            if (modes.empty()) {
                throw DomainError(fmt::format("estimator {}: multiple-model estimator needs at least one mode", name));
            }
            if (!(stay_probability > 0.0 && stay_probability <= 1.0)) {
                throw DomainError(fmt::format("estimator {}: stay probability must lie in (0, 1]", name));
            }
            break;
        case EstimatorKind::kGranstrom:
            if (!(n > 3.0)) {
                throw DomainError(fmt::format("estimator {}: n must exceed d + 1 = 3", name));
            }
            break;
        case EstimatorKind::kFeldmann:
            if (!(tau > 0.0)) {
                throw DomainError(fmt::format("estimator {}: tau must be > 0", name));
            }
            break;
        case EstimatorKind::kProposed:
            break;
    }
}

int ScenarioConfig::total_steps() const {
    int total = 0;
    for (const auto& s : segments) {
        total += s.steps;
    }
    return total;
}

void ScenarioConfig::validate() const {
    if (segments.empty()) {
        throw DomainError("scenario: at least one segment is required");
    }
    for (const auto& s : segments) {
        if (s.steps < 1) {
            throw DomainError("scenario: segment durations must be >= 1 step");
        }
    }
    if (!(major_diameter > 0.0 && minor_diameter > 0.0)) {
        throw DomainError("scenario: extent diameters must be > 0");
    }
    if (!(poisson_mean > 0.0)) {
        throw DomainError("scenario: poisson_mean must be > 0");
    }
    if (!(dt > 0.0)) {
        throw DomainError("scenario: dt must be > 0");
    }
    if (!is_positive_semidefinite(r)) {
        throw NotSpdError("scenario: R must be positive semidefinite", 0);
    }
    if (n_runs < 1) {
        throw DomainError("scenario: n_runs must be >= 1");
    }
    if (!(init.nu > 8.0)) {
        throw DomainError("scenario: initial nu must exceed 2d + 4 = 8");
    }
    for (const auto& e : estimators) {
        e.validate();
    }
}

EstimatorConfig bartlett_imm_estimator() {
    EstimatorConfig e;
    e.name = "M1";
    e.kind = EstimatorKind::kBartlettImm;
    e.modes = {{0.001, extent::InverseScaledNoise{0.2}},
               {3.0, extent::InverseScaledNoise{0.33}},
               {6.75, extent::DeterminantScaledNoise{1.25}}};
    e.stay_probability = 0.9;
    return e;
}

EstimatorConfig granstrom_estimator() {
    EstimatorConfig e;
    e.name = "M2";
    e.kind = EstimatorKind::kGranstrom;
    e.sigma_a = 2.0;
    e.sigma_omega = 0.1 * kDeg;
    e.n = 30.0;
    return e;
}

EstimatorConfig proposed_estimator() {
    EstimatorConfig e;
    e.name = "M3";
    e.kind = EstimatorKind::kProposed;
    e.sigma_a = 2.0;
    e.sigma_omega = 0.1 * kDeg;
    e.q = extent::InverseScaledNoise{0.33};
    e.v_rule = extent::VolumePreservingDof{};
    return e;
}

ScenarioConfig constant_turn_scenario() {
    ScenarioConfig cfg;
    cfg.name = "constant_turn";
    cfg.segments = {{18, 30.0, 0.0}, {36, 30.0, 10.0}, {6, 30.0, 0.0}};
    cfg.estimators = {bartlett_imm_estimator(), granstrom_estimator(), proposed_estimator()};
    return cfg;
}

ScenarioConfig variable_turn_scenario() {
    ScenarioConfig cfg;
    cfg.name = "variable_turn";
    cfg.segments = {{10, 30.0, 0.0}, {15, 30.0, 6.0},  {10, 30.0, 0.0}, {12, 30.0, -9.0}, {8, 30.0, 0.0},
                    {20, 30.0, 4.0}, {10, 30.0, 0.0}, {10, 30.0, -12.0}, {5, 30.0, 0.0}};
    cfg.estimators = {granstrom_estimator(), proposed_estimator()};
    return cfg;
}

GroundTruth generate_truth(const ScenarioConfig& cfg) {
    cfg.validate();
    GroundTruth truth;
    truth.steps.reserve(static_cast<std::size_t>(cfg.total_steps()));
    Eigen::Vector2d position = cfg.start;
    double heading = cfg.initial_heading_deg * kDeg;
    for (const auto& seg : cfg.segments) {
        const double omega = seg.turn_rate_deg * kDeg;
        for (int i = 0; i < seg.steps; ++i) {
            TruthStep step;
            step.position = position;
            step.velocity = seg.speed * Eigen::Vector2d(std::cos(heading), std::sin(heading));
            step.heading = heading;
            step.turn_rate = omega;
            step.extent = oriented_extent(heading, cfg.major_diameter, cfg.minor_diameter);
            truth.steps.push_back(step);

            // Exact circular arc of length speed * dt; the chord bisects the heading change.
            const double turn = omega * cfg.dt;
            const double chord = std::abs(turn) < 1e-12
                                     ? seg.speed * cfg.dt
                                     : seg.speed * cfg.dt * std::sin(0.5 * turn) / (0.5 * turn);
            const double mid = heading + 0.5 * turn;
            position += chord * Eigen::Vector2d(std::cos(mid), std::sin(mid));
            heading += turn;
        }
    }
    return truth;
}

correction::MeasurementSet generate_measurements(Rng& rng, const TruthStep& truth, const Eigen::MatrixXd& r,
                                                 double poisson_mean) {
    std::poisson_distribution<int> count_dist(poisson_mean);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Matrix2d shape = sym_sqrt(SpdMatrix(truth.extent)).matrix();
    const Eigen::Matrix2d noise_root = psd_sqrt(r);
    const int count = count_dist(rng);
    correction::MeasurementSet out;
    out.points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double angle = 2.0 * std::numbers::pi * uniform(rng);
        const double radius = std::sqrt(uniform(rng));
        const Eigen::Vector2d disk(radius * std::cos(angle), radius * std::sin(angle));
        const double n0 = normal(rng);
        const double n1 = normal(rng);
        out.points.emplace_back(truth.position + shape * disk + noise_root * Eigen::Vector2d(n0, n1));
    }
    return out;
}

correction::MeasurementSet generate_exact_measurements(const TruthStep& truth, int count) {
    if (count < 3) {
        throw DomainError(fmt::format("generate_exact_measurements: need at least 3 points, got {}", count));
    }
    const Eigen::Matrix2d shape = sym_sqrt(SpdMatrix(truth.extent)).matrix();
    const double radius = std::sqrt(0.5);
    correction::MeasurementSet out;
    out.points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / count;
        out.points.emplace_back(truth.position + shape * Eigen::Vector2d(radius * std::cos(angle), radius * std::sin(angle)));
    }
    return out;
}

}  // namespace etrack::sim
