#include "etrack/kinematics.hpp"

#include "etrack/spd_matrix.hpp"

#include <cmath>

#include <fmt/format.h>

namespace etrack::kinematics {

namespace {

// Turn coefficients and their omega-derivatives:
//   s = sin(wT)/w,  c = (1 - cos(wT))/w,  ds = d s / dw,  dc = d c / dw.
struct TurnCoefficients {
    double s;
    double c;
    double ds;
    double dc;
};

TurnCoefficients turn_coefficients(double w, double t) {
    if (std::abs(w) < kTurnRateSeriesThreshold) {
        const double w2 = w * w;
        const double t2 = t * t;
        return {t - w2 * t2 * t / 6.0, w * t2 / 2.0 - w2 * w * t2 * t2 / 24.0, -w * t2 * t / 3.0,
                t2 / 2.0 - w2 * t2 * t2 / 8.0};
    }
    const double a = w * t;
    const double sin_a = std::sin(a);
    const double cos_a = std::cos(a);
    const double half = std::sin(0.5 * a);
    const double one_minus_cos = 2.0 * half * half;
    return {sin_a / w, one_minus_cos / w, (a * cos_a - sin_a) / (w * w),
            (a * sin_a - one_minus_cos) / (w * w)};
}

void require_dim(const Eigen::VectorXd& x, Eigen::Index n, const char* who) {
    if (x.size() != n) {
        throw DomainError(fmt::format("{}: expected a {}-dimensional state, got {}", who, n, x.size()));
    }
}

}  // namespace

MotionModel MotionModel::constant_velocity(double dt, double q_tilde) {
    MotionModel m;
    m.kind = MotionKind::kConstantVelocity;
    m.dt = dt;
    m.q_tilde = q_tilde;
    return m;
}

MotionModel MotionModel::constant_turn(double dt, double sigma_a, double sigma_omega) {
    MotionModel m;
    m.kind = MotionKind::kConstantTurn;
    m.dt = dt;
    m.sigma_a = sigma_a;
    m.sigma_omega = sigma_omega;
    return m;
}

void MotionModel::validate() const {
    if (!(dt > 0.0)) {
        throw DomainError(fmt::format("motion model: time step must be > 0, got {}", dt));
    }
    if (q_tilde < 0.0 || sigma_a < 0.0 || sigma_omega < 0.0) {
        throw DomainError("motion model: noise parameters must be >= 0");
    }
}

TransitionResult ct_transition(const Eigen::VectorXd& x, double dt) {
    require_dim(x, 5, "ct_transition");
    const double vx = x(2);
    const double vy = x(3);
    const double w = x(4);
    const TurnCoefficients k = turn_coefficients(w, dt);
    const double cos_a = std::cos(w * dt);
    const double sin_a = std::sin(w * dt);

    Eigen::VectorXd next(5);
    next << x(0) + k.s * vx - k.c * vy, x(1) + k.c * vx + k.s * vy, cos_a * vx - sin_a * vy,
        sin_a * vx + cos_a * vy, w;

    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(5, 5);
    f(0, 2) = k.s;
    f(0, 3) = -k.c;
    f(0, 4) = k.ds * vx - k.dc * vy;
    f(1, 2) = k.c;
    f(1, 3) = k.s;
    f(1, 4) = k.dc * vx + k.ds * vy;
    f(2, 2) = cos_a;
    f(2, 3) = -sin_a;
    f(2, 4) = -dt * (sin_a * vx + cos_a * vy);
    f(3, 2) = sin_a;
    f(3, 3) = cos_a;
    f(3, 4) = dt * (cos_a * vx - sin_a * vy);
    return {next, f};
}

TransitionResult cv_transition(const Eigen::VectorXd& x, double dt) {
    require_dim(x, 4, "cv_transition");
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(4, 4);
    f(0, 2) = dt;
    f(1, 3) = dt;
    return {f * x, f};
}

Eigen::MatrixXd process_noise(const MotionModel& model) {
    model.validate();
    const double t = model.dt;
    const Eigen::Index n = model.state_dim();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    double pp = 0.0;
    double pv = 0.0;
    double vv = 0.0;
    if (model.kind == MotionKind::kConstantVelocity) {
        pp = model.q_tilde * t * t * t / 3.0;
        pv = model.q_tilde * t * t / 2.0;
        vv = model.q_tilde * t;
    } else {
        const double var = model.sigma_a * model.sigma_a;
        pp = var * t * t * t * t / 4.0;
        pv = var * t * t * t / 2.0;
        vv = var * t * t;
        d(4, 4) = t * model.sigma_omega * model.sigma_omega;
    }
    for (Eigen::Index i = 0; i < 2; ++i) {
        d(i, i) = pp;
        d(i, i + 2) = pv;
        d(i + 2, i) = pv;
        d(i + 2, i + 2) = vv;
    }
    return d;
}

GaussianState predict_kinematic(const GaussianState& state, const MotionModel& model) {
    model.validate();
    if (state.dim() != model.state_dim() || state.cov.rows() != state.dim() ||
        state.cov.cols() != state.dim()) {
        throw DomainError(fmt::format("predict_kinematic: state of dimension {} does not match model ({})",
                                      state.dim(), model.state_dim()));
    }
    const TransitionResult tr = model.kind == MotionKind::kConstantTurn ? ct_transition(state.mean, model.dt)
                                                                       : cv_transition(state.mean, model.dt);
    return {tr.state, symmetrize(tr.jacobian * state.cov * tr.jacobian.transpose() + process_noise(model))};
}

Eigen::MatrixXd position_selector(Eigen::Index state_dim, Eigen::Index d) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, state_dim);
    h.leftCols(d).setIdentity();
    return h;
}

}  // namespace etrack::kinematics
