#include "etrack/correction.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace etrack::correction {
namespace {

kinematics::GaussianState prior_kin(Rng& rng) {
    std::normal_distribution<double> normal;
    kinematics::GaussianState kin{Eigen::VectorXd(5), testing::random_spd(rng, 5, 0.1, 10.0)};
    kin.mean << 100 * normal(rng), -50 * normal(rng), 20 * normal(rng), 5 * normal(rng), 0.05 * normal(rng);
    return kin;
}

SensorModel default_sensor() {
    return {kinematics::position_selector(5), Eigen::Vector2d(4.0, 1.0).asDiagonal(), 0.25};
}

MeasurementSet draw_points(Rng& rng, const Eigen::Vector2d& centre, const Eigen::Matrix2d& cov, int n) {
    std::normal_distribution<double> normal;
    const Eigen::Matrix2d l = cov.llt().matrixL();
    MeasurementSet out;
    for (int i = 0; i < n; ++i) {
        out.points.emplace_back(centre + l * Eigen::Vector2d(normal(rng), normal(rng)));
    }
    return out;
}

// Direct evaluation of N(z_bar; H m, H P H^T + Y / n) + ln W_d(scatter | n - 1, Y) with Y = lambda X_hat + R.
double reference_log_likelihood(const kinematics::GaussianState& kin, const extent::ExtentState& ext,
                                const MeasurementSet& meas, const SensorModel& sensor) {
    const int d = 2;
    const double n = static_cast<double>(meas.size());
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& z : meas.points) {
        mean += z;
    }
    mean /= n;
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (const auto& z : meas.points) {
        scatter += (z - mean) * (z - mean).transpose();
    }
    const Eigen::Matrix2d y = sensor.lambda * ext.v_mat.matrix() / (ext.nu - 6.0) + sensor.r;
    const Eigen::Matrix2d s = sensor.h * kin.cov * sensor.h.transpose() + y / n;
    const Eigen::Vector2d e = mean - sensor.h * kin.mean;
    double out = -0.5 * (d * std::log(2 * std::numbers::pi) + std::log(s.determinant()) + e.dot(s.inverse() * e));
    const double w = n - 1.0;
    if (w >= d) {
        const double ln_gamma2 = 0.5 * std::log(std::numbers::pi) + std::lgamma(w / 2) + std::lgamma((w - 1) / 2);
        out += 0.5 * (w - d - 1) * std::log(scatter.determinant()) - 0.5 * (y.inverse() * scatter).trace() -
               0.5 * w * d * std::numbers::ln2 - 0.5 * w * std::log(y.determinant()) - ln_gamma2;
    }
    return out;
}

TEST(Summarize, CentroidAndScatter) {
    MeasurementSet m{{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0), Eigen::Vector2d(1, 3)}};
    const auto s = summarize(m, 2);
    EXPECT_EQ(s.count, 3u);
    EXPECT_LT((s.mean - Eigen::Vector2d(1, 1)).norm(), 1e-15);
    Eigen::Matrix2d expected;
    expected << 2.0, 0.0, 0.0, 6.0;
    EXPECT_LT((s.scatter - expected).norm(), 1e-14);
    EXPECT_THROW((void)summarize({{Eigen::Vector3d::Zero()}}, 2), DomainError);
    EXPECT_THROW((void)summarize({{Eigen::Vector2d(NAN, 0)}}, 2), DomainError);
}

TEST(Correct, EmptySetIsIdentity) {
    Rng rng(80);
    const auto kin = prior_kin(rng);
    const extent::ExtentState ext{12.0, SpdMatrix::diagonal({600.0, 150.0})};
    const auto out = correct(kin, ext, {}, default_sensor());
    EXPECT_EQ(out.kin.mean, kin.mean);
    EXPECT_EQ(out.kin.cov, kin.cov);
    EXPECT_EQ(out.extent.nu, ext.nu);
    EXPECT_EQ(out.extent.v_mat.matrix(), ext.v_mat.matrix());
    EXPECT_EQ(log_likelihood(kin, ext, {}, default_sensor()), 0.0);
}

TEST(Correct, ZeroInnovationSinglePoint) {
    Rng rng(81);
    const auto kin = prior_kin(rng);
    const extent::ExtentState ext{12.0, SpdMatrix::diagonal({600.0, 150.0})};
    const auto sensor = default_sensor();
    const auto out = correct(kin, ext, {{sensor.h * kin.mean}}, sensor);
    EXPECT_LT((out.kin.mean - kin.mean).norm(), 1e-12 * kin.mean.norm());
    EXPECT_DOUBLE_EQ(out.extent.nu, 13.0);
    EXPECT_LT(testing::max_rel_error(out.extent.v_mat.matrix(), ext.v_mat.matrix()), 1e-14);
}

TEST(Correct, KinematicUpdateMatchesInformationForm) {
    Rng rng(82);
    const auto sensor = default_sensor();
    for (int i = 0; i < 200; ++i) {
        const auto kin = prior_kin(rng);
        const extent::ExtentState ext{7.0 + i % 20, SpdMatrix(testing::random_spd(rng, 2, 10.0, 1000.0))};
        const auto meas = draw_points(rng, sensor.h * kin.mean, Eigen::Matrix2d::Identity() * 25.0, 1 + i % 15);
        const auto out = correct(kin, ext, meas, sensor);
        const double n = static_cast<double>(meas.size());
        const Eigen::Matrix2d y = sensor.lambda * ext.expected() + sensor.r;
        const Eigen::MatrixXd info = kin.cov.inverse() + sensor.h.transpose() * (n * y.inverse()) * sensor.h;
        const Eigen::MatrixXd p_post = info.inverse();
        const Eigen::VectorXd m_post =
            p_post * (kin.cov.inverse() * kin.mean + sensor.h.transpose() * (n * y.inverse()) * summarize(meas, 2).mean);
        EXPECT_LT(testing::max_rel_error(out.kin.cov, p_post), 1e-9);
        EXPECT_LT((out.kin.mean - m_post).norm(), 1e-9 * std::max(1.0, m_post.norm()));
        // P' <= P and V' >= V in the Loewner order.
        EXPECT_TRUE(is_positive_semidefinite(kin.cov - out.kin.cov, 1e-9));
        EXPECT_TRUE(is_positive_semidefinite(out.extent.v_mat.matrix() - ext.v_mat.matrix(), 1e-9));
        EXPECT_DOUBLE_EQ(out.extent.nu, ext.nu + n);
    }
}

TEST(Correct, PermutationInvariant) {
    Rng rng(83);
    const auto sensor = default_sensor();
    const auto kin = prior_kin(rng);
    const extent::ExtentState ext{15.0, SpdMatrix::diagonal({900.0, 200.0})};
    auto meas = draw_points(rng, sensor.h * kin.mean + Eigen::Vector2d(3, -2), Eigen::Matrix2d::Identity() * 30.0, 12);
    const auto a = correct(kin, ext, meas, sensor);
    std::reverse(meas.points.begin(), meas.points.end());
    std::shuffle(meas.points.begin(), meas.points.end(), rng);
    const auto b = correct(kin, ext, meas, sensor);
    EXPECT_LT((a.kin.mean - b.kin.mean).norm(), 1e-11 * a.kin.mean.norm());
    EXPECT_LT(testing::max_rel_error(b.kin.cov, a.kin.cov), 1e-12);
    EXPECT_LT(testing::max_rel_error(b.extent.v_mat.matrix(), a.extent.v_mat.matrix()), 1e-12);
}

TEST(Correct, ExtentConsistentForManyNoiseFreePoints) {
    // With R = 0 and lambda = 1 the scatter is mapped unchanged, so a large scan recovers
    // the true spread regardless of the prior expectation.
    Rng rng(84);
    SensorModel sensor{kinematics::position_selector(5), Eigen::Matrix2d::Zero(), 1.0};
    kinematics::GaussianState kin{Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Identity(5, 5)};
    const extent::ExtentState ext{10.0, SpdMatrix::diagonal({400.0, 400.0})};
    Eigen::Matrix2d truth;
    truth << 250.0, 60.0, 60.0, 40.0;
    const auto meas = draw_points(rng, Eigen::Vector2d(1.0, -1.0), truth, 100000);
    const auto out = correct(kin, ext, meas, sensor);
    EXPECT_LT(testing::max_rel_error(out.extent.expected(), truth), 0.03);
}

TEST(Correct, RejectsInvalidSensor) {
    Rng rng(85);
    const auto kin = prior_kin(rng);
    const extent::ExtentState ext{12.0, SpdMatrix::diagonal({600.0, 150.0})};
    const MeasurementSet one{{Eigen::Vector2d::Zero()}};
    auto sensor = default_sensor();
    sensor.lambda = 0.0;
    EXPECT_THROW((void)correct(kin, ext, one, sensor), DomainError);
    sensor = default_sensor();
    sensor.r = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    EXPECT_THROW((void)correct(kin, ext, one, sensor), NotSpdError);
    sensor = default_sensor();
    sensor.h = kinematics::position_selector(4);
    EXPECT_THROW((void)correct(kin, ext, one, sensor), DomainError);
    EXPECT_THROW((void)correct(kin, {6.0, SpdMatrix::identity(2)}, one, default_sensor()), DomainError);
}

TEST(LogLikelihood, MatchesDirectEvaluation) {
    Rng rng(86);
    const auto sensor = default_sensor();
    for (int i = 0; i < 200; ++i) {
        const auto kin = prior_kin(rng);
        const extent::ExtentState ext{7.5 + i % 30, SpdMatrix(testing::random_spd(rng, 2, 10.0, 1000.0))};
        const auto meas = draw_points(rng, sensor.h * kin.mean, testing::random_spd(rng, 2, 5.0, 50.0), 1 + i % 12);
        const double ref = reference_log_likelihood(kin, ext, meas, sensor);
        EXPECT_NEAR(log_likelihood(kin, ext, meas, sensor), ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

}  // namespace
}  // namespace etrack::correction
