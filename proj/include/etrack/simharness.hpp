#pragma once

#include "etrack/correction.hpp"
#include "etrack/extent.hpp"
#include "etrack/kinematics.hpp"
#include "etrack/rng.hpp"
#include "etrack/spd_matrix.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace etrack::sim {

/// Piece of the trajectory flown at constant speed and turn rate.
struct Segment {
    int steps = 1;
    double speed = 30.0;           // m/s
    double turn_rate_deg = 0.0;    // deg/s
};

struct TruthStep {
    Eigen::Vector2d position;
    Eigen::Vector2d velocity;
    double heading = 0.0;          // rad
    double turn_rate = 0.0;        // rad/s, the rate applied from this step to the next
    Eigen::Matrix2d extent;

    /// [x, y, vx, vy] or [x, y, vx, vy, omega].
    [[nodiscard]] Eigen::VectorXd kinematic(Eigen::Index state_dim) const;
};

struct GroundTruth {
    std::vector<TruthStep> steps;
};

enum class EstimatorKind { kBartlettImm, kGranstrom, kProposed, kFeldmann };

/// One mode of the multiple-model Bartlett estimator.
struct ImmMode {
    double q_tilde = 0.0;          // m^2/s^3
    extent::NoiseRule q = extent::FixedNoise{};
};

struct EstimatorConfig {
    std::string name;
    EstimatorKind kind = EstimatorKind::kProposed;

    // Constant-turn kinematics (Granstrom, proposed).
    double sigma_a = 2.0;                    // m/s^2
    double sigma_omega = 0.0;                // rad/s
    // Constant-velocity kinematics (Feldmann).
    double q_tilde = 3.0;                    // m^2/s^3

    // Bartlett multiple-model estimator.
    std::vector<ImmMode> modes;
    double stay_probability = 0.9;

    // Granstrom Wishart transition.
    double n = 30.0;

    // Proposed prediction.
    extent::NoiseRule q = extent::InverseScaledNoise{0.33};
    extent::DofRule v_rule = extent::VolumePreservingDof{};
    extent::NuMode nu_mode = extent::NuMode::kClosedForm;
    extent::TaylorWeight taylor_weight = extent::TaylorWeight::kUnit;

    // Feldmann forgetting.
    double tau = 5.0;                        // s

    [[nodiscard]] bool uses_turn_rate() const {
        return kind == EstimatorKind::kGranstrom || kind == EstimatorKind::kProposed;
    }
    [[nodiscard]] Eigen::Index state_dim() const { return uses_turn_rate() ? 5 : 4; }
    void validate() const;
};

/// Prior of every filter at k = 0, centred on a perturbed truth.
struct InitConfig {
    double position_std = 10.0;              // m
    double velocity_std = 5.0;               // m/s
    double turn_rate_std_deg = 2.0;          // deg/s
    double nu = 10.0;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::vector<Segment> segments;
    double initial_heading_deg = 0.0;
    Eigen::Vector2d start = Eigen::Vector2d::Zero();
    double major_diameter = 50.0;            // m
    double minor_diameter = 16.0;            // m
    double dt = 1.0;                         // s
    double poisson_mean = 10.0;
    Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * 1.5 * 1.5;
    double lambda = 0.25;
    int n_runs = 900;
    std::uint64_t master_seed = 1;
    /// Replaces the random scans by generate_exact_measurements with round(poisson_mean)
    /// points and R = 0, and disables the initial-state perturbation.
    bool noise_free = false;
    InitConfig init;
    std::vector<EstimatorConfig> estimators;

    [[nodiscard]] int total_steps() const;
    void validate() const;
};

/// Scenario of a straight leg followed by a 10 deg/s turn at k = 18, with the
/// three estimators M1 (Bartlett multiple model), M2 (Granstrom) and M3 (proposed).
[[nodiscard]] ScenarioConfig constant_turn_scenario();

/// Alternating straight legs and left/right turns of varying rate; M2 and M3 only.
/// The segment table approximates a reference trajectory.
[[nodiscard]] ScenarioConfig variable_turn_scenario();

[[nodiscard]] EstimatorConfig bartlett_imm_estimator();
[[nodiscard]] EstimatorConfig granstrom_estimator();
[[nodiscard]] EstimatorConfig proposed_estimator();

[[nodiscard]] GroundTruth generate_truth(const ScenarioConfig& cfg);

/// Poisson number of points, uniform over the ellipse {y : y^T X^{-1} y <= 1} around the
/// true centre, plus N(0, R) noise.
[[nodiscard]] correction::MeasurementSet generate_measurements(Rng& rng, const TruthStep& truth,
                                                               const Eigen::MatrixXd& r, double poisson_mean);

/// Noise-free scan: `count` points evenly spaced on the ellipse {y : y^T X^{-1} y = 1/2}, whose
/// sample mean is the true centre and whose sample covariance X / 4 equals that of a uniform fill.
[[nodiscard]] correction::MeasurementSet generate_exact_measurements(const TruthStep& truth, int count);

/// Gaussian-Wasserstein distance between the true ellipse and the estimate's expected extent.
[[nodiscard]] double gw_distance(const Eigen::VectorXd& truth_position, const Eigen::MatrixXd& truth_extent,
                                 const kinematics::GaussianState& kin, const extent::ExtentState& extent);

/// Normalised kinematic error (m - x)^T P^{-1} (m - x) / n_x.
[[nodiscard]] double nees_kinematic(const kinematics::GaussianState& kin, const Eigen::VectorXd& truth);

/// Tr((E[X] - X)^2) / Tr(Var(X)), the variance summed element-wise; needs nu > 2d + 4.
[[nodiscard]] double nees_extent(const extent::ExtentState& extent, const Eigen::MatrixXd& truth_extent);

/// Filter estimate after a correction.
struct Estimate {
    kinematics::GaussianState kin;
    extent::ExtentState extent;
};

/// Recursive filter for one estimator configuration.
class Tracker {
public:
    Tracker(EstimatorConfig cfg, double dt, correction::SensorModel sensor);

    void initialize(const kinematics::GaussianState& kin, const extent::ExtentState& extent);
    void predict();
    void correct(const correction::MeasurementSet& meas);
    [[nodiscard]] Estimate estimate() const;
    [[nodiscard]] const EstimatorConfig& config() const { return cfg_; }
    /// Mode probabilities of the multiple-model estimator (a single 1 otherwise).
    [[nodiscard]] const std::vector<double>& mode_probabilities() const { return probabilities_; }

private:
    void predict_multiple_model();
    void correct_multiple_model(const correction::MeasurementSet& meas);

    EstimatorConfig cfg_;
    double dt_;
    correction::SensorModel sensor_;
    std::vector<Estimate> modes_;
    std::vector<double> probabilities_;
};

struct StepMetrics {
    double gw = 0.0;
    double anees_x = 0.0;
    double anees_ext = 0.0;
    double nu = 0.0;
    double logdet_v = 0.0;
};

struct EstimatorReport {
    std::string name;
    std::vector<StepMetrics> steps;
    int valid_runs = 0;
    int diverged_runs = 0;
    /// First failure message of each diverged run, in run order.
    std::vector<std::string> divergence_messages;
};

/// Per-step averages over the non-diverged runs. gw is the root of the mean squared
/// distance; all other columns are plain means.
struct MetricsReport {
    std::string scenario;
    int n_runs = 0;
    int n_steps = 0;
    std::vector<EstimatorReport> estimators;
};

/// Per-step metrics of one estimator along one run (empty when the run diverged).
struct RunTrace {
    std::vector<StepMetrics> steps;
    bool diverged = false;
    std::string message;
};

/// One Monte-Carlo run with its own random stream; `run` selects the stream.
[[nodiscard]] std::vector<RunTrace> run_single(const ScenarioConfig& cfg, const GroundTruth& truth, int run);

/// N independent runs on `threads` workers (0 picks the hardware concurrency). The report
/// is reduced in run order and does not depend on the worker count.
[[nodiscard]] MetricsReport run_monte_carlo(const ScenarioConfig& cfg, unsigned threads = 0);

}  // namespace etrack::sim
