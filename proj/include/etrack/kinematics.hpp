#pragma once

#include <Eigen/Dense>

namespace etrack::kinematics {

/// Gaussian density N(x | mean, cov) over the kinematic state. The covariance must be
/// symmetric positive semidefinite; a zero covariance is legal and means "known state".
struct GaussianState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

enum class MotionKind { kConstantVelocity, kConstantTurn };

/// Kinematic transition model.
///   constant velocity: x = [x, y, vx, vy], continuous white-noise acceleration with
///                      intensity q_tilde (m^2/s^3).
///   constant turn:     x = [x, y, vx, vy, omega], piecewise-constant acceleration with
///                      standard deviation sigma_a (m/s^2) and turn-rate noise sigma_omega (rad/s).
struct MotionModel {
    MotionKind kind = MotionKind::kConstantVelocity;
    double dt = 1.0;
    double q_tilde = 0.0;
    double sigma_a = 0.0;
    double sigma_omega = 0.0;

    [[nodiscard]] static MotionModel constant_velocity(double dt, double q_tilde);
    [[nodiscard]] static MotionModel constant_turn(double dt, double sigma_a, double sigma_omega);

    [[nodiscard]] Eigen::Index state_dim() const { return kind == MotionKind::kConstantTurn ? 5 : 4; }
    void validate() const;
};

struct TransitionResult {
    Eigen::VectorXd state;
    Eigen::MatrixXd jacobian;
};

/// Below this |omega| (rad/s) the coordinated-turn coefficients use their series form.
inline constexpr double kTurnRateSeriesThreshold = 1e-6;

/// Exact-arc coordinated turn: the velocity rotates by omega * dt, the position moves
/// along the corresponding circular arc, omega is carried unchanged.
[[nodiscard]] TransitionResult ct_transition(const Eigen::VectorXd& x, double dt);

[[nodiscard]] TransitionResult cv_transition(const Eigen::VectorXd& x, double dt);

/// Process noise covariance D of the model.
[[nodiscard]] Eigen::MatrixXd process_noise(const MotionModel& model);

/// EKF prediction: mean = f(m), cov = F P F^T + D, re-symmetrised.
[[nodiscard]] GaussianState predict_kinematic(const GaussianState& state, const MotionModel& model);

/// Observation matrix picking the planar position out of an n_x-dimensional state.
[[nodiscard]] Eigen::MatrixXd position_selector(Eigen::Index state_dim, Eigen::Index d = 2);

}  // namespace etrack::kinematics
