#include "etrack/kinematics.hpp"
#include "etrack/spd_matrix.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace etrack::kinematics {
namespace {

Eigen::VectorXd ct_state(double x, double y, double vx, double vy, double w) {
    Eigen::VectorXd s(5);
    s << x, y, vx, vy, w;
    return s;
}

Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& x, double dt, bool turn) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd j(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(c)));
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp(c) += h;
        xm(c) -= h;
        const auto fp = turn ? ct_transition(xp, dt).state : cv_transition(xp, dt).state;
        const auto fm = turn ? ct_transition(xm, dt).state : cv_transition(xm, dt).state;
        j.col(c) = (fp - fm) / (2.0 * h);
    }
    return j;
}

TEST(ConstantVelocity, StationaryTargetStaysPut) {
    const GaussianState s{Eigen::Vector4d(3.0, -2.0, 0.0, 0.0), Eigen::Matrix4d::Identity()};
    const auto out = predict_kinematic(s, MotionModel::constant_velocity(1.0, 0.0));
    EXPECT_TRUE(out.mean.isApprox(s.mean, 0.0));
}

TEST(ConstantVelocity, NoiseIsWhiteAccelerationBlock) {
    const double t = 0.7;
    const double q = 2.3;
    const Eigen::MatrixXd d = process_noise(MotionModel::constant_velocity(t, q));
    for (int axis = 0; axis < 2; ++axis) {
        EXPECT_DOUBLE_EQ(d(axis, axis), q * t * t * t / 3.0);
        EXPECT_DOUBLE_EQ(d(axis, axis + 2), q * t * t / 2.0);
        EXPECT_DOUBLE_EQ(d(axis + 2, axis + 2), q * t);
    }
    EXPECT_EQ(d(0, 1), 0.0);
}

TEST(ConstantTurn, StraightLineAtZeroRate) {
    const auto out = ct_transition(ct_state(0, 0, 30, 0, 0), 1.0);
    EXPECT_TRUE(out.state.isApprox(ct_state(30, 0, 30, 0, 0), 1e-15));
}

TEST(ConstantTurn, HalfTurnNegatesVelocity) {
    const auto out = ct_transition(ct_state(1, 2, 3, -4, std::numbers::pi), 1.0);
    EXPECT_NEAR(out.state(2), -3.0, 1e-12);
    EXPECT_NEAR(out.state(3), 4.0, 1e-12);
    EXPECT_EQ(out.state(4), std::numbers::pi);
    // Arc of a half circle: displacement 2 r perpendicular to the initial velocity, r = |v| / omega.
    const double r = 5.0 / std::numbers::pi;
    EXPECT_NEAR((out.state.head<2>() - Eigen::Vector2d(1, 2)).norm(), 2.0 * r, 1e-12);
}

TEST(ConstantTurn, PreservesSpeed) {
    Rng rng(41);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 1000; ++i) {
        const auto x = ct_state(normal(rng) * 100, normal(rng) * 100, normal(rng) * 30, normal(rng) * 30, normal(rng));
        const auto out = ct_transition(x, 0.5 + std::abs(normal(rng)));
        EXPECT_NEAR(out.state.segment<2>(2).norm(), x.segment<2>(2).norm(), 1e-10 * x.segment<2>(2).norm());
    }
}

TEST(ConstantTurn, ReducesToConstantVelocityContinuously) {
    const auto base = ct_state(5, 6, 20, -10, 0.0);
    const auto cv = cv_transition(base.head(4), 1.0);
    for (double w : {0.0, 0.5e-6, 0.999999e-6, 1.000001e-6, 2e-6}) {
        for (double sign : {1.0, -1.0}) {
            auto x = base;
            x(4) = sign * w;
            const auto ct = ct_transition(x, 1.0);
            // Deviation from straight-line motion is O(|v| w T^2 / 2) <= 2e-5; the test is on continuity.
            EXPECT_LE((ct.state.head(4) - cv.state).norm(), 30.0 * w);
        }
    }
    auto below = base;
    below(4) = kTurnRateSeriesThreshold * (1.0 - 1e-9);
    auto above = base;
    above(4) = kTurnRateSeriesThreshold * (1.0 + 1e-9);
    EXPECT_LT((ct_transition(below, 1.0).state - ct_transition(above, 1.0).state).norm(), 1e-9);
    EXPECT_LT((ct_transition(below, 1.0).jacobian - ct_transition(above, 1.0).jacobian).norm(), 1e-9);
}

TEST(Jacobians, MatchFiniteDifferences) {
    Rng rng(42);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 300; ++i) {
        const double w = (i % 3 == 0) ? 1e-8 * normal(rng) : 0.3 * normal(rng);
        const auto x = ct_state(normal(rng) * 50, normal(rng) * 50, normal(rng) * 30, normal(rng) * 30, w);
        const double dt = 0.2 + std::abs(normal(rng));
        EXPECT_LT((ct_transition(x, dt).jacobian - fd_jacobian(x, dt, true)).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LT((cv_transition(x.head(4), dt).jacobian - fd_jacobian(x.head(4), dt, false)).cwiseAbs().maxCoeff(),
                  1e-6);
    }
}

TEST(Prediction, CovarianceIsFPFtPlusD) {
    Rng rng(43);
    const auto model = MotionModel::constant_turn(1.0, 2.0, 0.1 * std::numbers::pi / 180.0);
    for (int i = 0; i < 50; ++i) {
        const GaussianState s{ct_state(0, 0, 25, 10, 0.1), testing::random_spd(rng, 5, 0.01, 10.0)};
        const auto out = predict_kinematic(s, model);
        const auto tr = ct_transition(s.mean, 1.0);
        const Eigen::MatrixXd expected = tr.jacobian * s.cov * tr.jacobian.transpose() + process_noise(model);
        EXPECT_LT((out.cov - expected).norm(), 1e-10 * expected.norm());
        EXPECT_EQ((out.cov - out.cov.transpose()).norm(), 0.0);
        EXPECT_NO_THROW(SpdMatrix{out.cov});
    }
}

TEST(Prediction, TurnNoiseEntry) {
    const double sw = 0.02;
    const Eigen::MatrixXd d = process_noise(MotionModel::constant_turn(2.0, 1.0, sw));
    EXPECT_DOUBLE_EQ(d(4, 4), 2.0 * sw * sw);
    // Acceleration enters through a 4 x 2 gain, so D is only semidefinite.
    EXPECT_TRUE(is_positive_semidefinite(d));
    EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(d).rank(), 3);
}

TEST(Prediction, DimensionMismatchThrows) {
    const GaussianState s{Eigen::Vector4d::Zero(), Eigen::Matrix4d::Identity()};
    EXPECT_THROW((void)predict_kinematic(s, MotionModel::constant_turn(1.0, 1.0, 0.1)), DomainError);
    EXPECT_THROW((void)MotionModel::constant_velocity(0.0, 1.0).validate(), DomainError);
    EXPECT_THROW((void)MotionModel::constant_velocity(1.0, -1.0).validate(), DomainError);
}

TEST(PositionSelector, PicksPosition) {
    const Eigen::MatrixXd h = position_selector(5);
    EXPECT_EQ(h.rows(), 2);
    EXPECT_EQ(h.cols(), 5);
    EXPECT_TRUE((h * ct_state(7, 8, 1, 2, 3)).isApprox(Eigen::Vector2d(7, 8)));
}

}  // namespace
}  // namespace etrack::kinematics
