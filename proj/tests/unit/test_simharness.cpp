#include "etrack/simharness.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace etrack::sim {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ScenarioConfig small_scenario(int runs) {
    auto cfg = constant_turn_scenario();
    cfg.n_runs = runs;
    cfg.master_seed = 4242;
    return cfg;
}

TEST(Truth, FollowsSegmentsOnExactArcs) {
    const auto cfg = constant_turn_scenario();
    const auto truth = generate_truth(cfg);
    ASSERT_EQ(static_cast<int>(truth.steps.size()), cfg.total_steps());
    ASSERT_EQ(truth.steps.size(), 60u);
    const double det0 = truth.steps.front().extent.determinant();
    for (std::size_t k = 0; k + 1 < truth.steps.size(); ++k) {
        const auto& a = truth.steps[k];
        const auto& b = truth.steps[k + 1];
        EXPECT_NEAR(a.velocity.norm(), 30.0, 1e-12);
        EXPECT_NEAR(b.extent.determinant(), det0, 1e-9 * det0);
        if (a.turn_rate == 0.0) {
            EXPECT_LT((b.position - a.position - a.velocity * cfg.dt).norm(), 1e-10);
        } else {
            // Both ends on the turning circle of radius speed / omega.
            const double radius = 30.0 / a.turn_rate;
            const Eigen::Vector2d centre = a.position + radius * Eigen::Vector2d(-std::sin(a.heading), std::cos(a.heading));
            EXPECT_NEAR((b.position - centre).norm(), std::abs(radius), 1e-9);
            EXPECT_NEAR(b.heading - a.heading, a.turn_rate * cfg.dt, 1e-14);
        }
        // Major axis along the heading.
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a.extent);
        EXPECT_NEAR(std::abs(es.eigenvectors().col(1).dot(a.velocity.normalized())), 1.0, 1e-12);
        EXPECT_NEAR(es.eigenvalues()(1), 625.0, 1e-9);
        EXPECT_NEAR(es.eigenvalues()(0), 64.0, 1e-9);
    }
    EXPECT_NEAR(truth.steps[18].turn_rate, 10.0 * kDeg, 1e-15);
    EXPECT_NEAR(truth.steps.back().heading - truth.steps.front().heading, 360.0 * kDeg, 1e-12);
}

TEST(Truth, KinematicVector) {
    const auto truth = generate_truth(constant_turn_scenario());
    const auto& s = truth.steps[20];
    const auto x5 = s.kinematic(5);
    EXPECT_EQ(x5.head(2), s.position);
    EXPECT_EQ(x5.segment(2, 2), s.velocity);
    EXPECT_EQ(x5(4), s.turn_rate);
    EXPECT_EQ(s.kinematic(4), x5.head(4));
}

TEST(Measurements, CountAndSpread) {
    Rng rng(90);
    TruthStep t;
    t.position = Eigen::Vector2d(100.0, -40.0);
    t.extent << 400.0, 120.0, 120.0, 100.0;
    const Eigen::Matrix2d r = Eigen::Vector2d(2.0, 0.5).asDiagonal();
    const int scans = 100000;
    double count = 0.0;
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    Eigen::Matrix2d sum2 = Eigen::Matrix2d::Zero();
    for (int i = 0; i < scans; ++i) {
        for (const auto& z : generate_measurements(rng, t, r, 10.0).points) {
            const Eigen::Vector2d e = z - t.position;
            sum += e;
            sum2 += e * e.transpose();
            count += 1.0;
        }
    }
    EXPECT_NEAR(count / scans, 10.0, 0.05);
    EXPECT_LT((sum / count).norm(), 0.05);
    // Uniform fill of the ellipse has covariance X / 4.
    EXPECT_LT(testing::max_rel_error(sum2 / count, t.extent / 4.0 + r), 0.01);
}

TEST(Measurements, DegenerateExtentAndZeroRate) {
    Rng rng(91);
    TruthStep t;
    t.position = Eigen::Vector2d(1.0, 2.0);
    t.extent = Eigen::Vector2d(1e-12, 1e-12).asDiagonal();
    for (const auto& z : generate_measurements(rng, t, Eigen::Matrix2d::Zero(), 5.0).points) {
        EXPECT_LT((z - t.position).norm(), 1e-5);
    }
    EXPECT_TRUE(generate_measurements(rng, t, Eigen::Matrix2d::Zero(), 0.0).empty());
}

TEST(Measurements, ExactScanMoments) {
    TruthStep t;
    t.position = Eigen::Vector2d(-5.0, 7.0);
    t.extent << 400.0, 120.0, 120.0, 100.0;
    for (int n : {3, 4, 10, 17}) {
        const auto meas = generate_exact_measurements(t, n);
        ASSERT_EQ(meas.size(), static_cast<std::size_t>(n));
        const auto stats = correction::summarize(meas, 2);
        EXPECT_LT((stats.mean - t.position).norm(), 1e-12);
        EXPECT_LT(testing::max_rel_error(stats.scatter / n, t.extent / 4.0), 1e-12);
    }
    EXPECT_THROW((void)generate_exact_measurements(t, 2), DomainError);
}

TEST(Metrics, GaussianWassersteinExamples) {
    kinematics::GaussianState kin{Eigen::Vector4d(3.0, 4.0, 0.0, 0.0), Eigen::Matrix4d::Identity()};
    const Eigen::Matrix2d x = Eigen::Vector2d(9.0, 4.0).asDiagonal();
    const extent::ExtentState exact{10.0, SpdMatrix(4.0 * x)};
    EXPECT_NEAR(gw_distance(Eigen::Vector2d(3.0, 4.0), x, kin, exact), 0.0, 1e-7);
    EXPECT_NEAR(gw_distance(Eigen::Vector2d::Zero(), x, kin, exact), 5.0, 1e-12);
    // Commuting extents: the shape term is ||X^{1/2} - Y^{1/2}||_F^2.
    const extent::ExtentState other{10.0, SpdMatrix(4.0 * Eigen::Vector2d(1.0, 16.0).asDiagonal().toDenseMatrix())};
    EXPECT_NEAR(gw_distance(Eigen::Vector2d(3.0, 4.0), x, kin, other), std::sqrt(4.0 + 4.0), 1e-12);
    // Scalar case: sqrt((m - p)^2 + (sqrt(x) - sqrt(y))^2).
    kinematics::GaussianState kin1{Eigen::Vector2d(2.0, 0.0), Eigen::Matrix2d::Identity()};
    const extent::ExtentState e1{10.0, SpdMatrix(Eigen::MatrixXd::Constant(1, 1, 6.0 * 25.0))};
    EXPECT_NEAR(gw_distance(Eigen::VectorXd::Constant(1, -1.0), Eigen::MatrixXd::Constant(1, 1, 9.0), kin1, e1),
                std::sqrt(9.0 + 4.0), 1e-12);
}

TEST(Metrics, NormalisedErrorsAverageToOne) {
    Rng rng(92);
    std::normal_distribution<double> normal;
    const Eigen::MatrixXd p = testing::random_spd(rng, 5, 0.1, 10.0);
    const Eigen::MatrixXd l = p.llt().matrixL();
    const kinematics::GaussianState kin{Eigen::VectorXd::Zero(5), p};
    const extent::ExtentState ext{14.0, SpdMatrix::diagonal({800.0, 200.0})};
    double sx = 0.0;
    double se = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd w(5);
        for (int j = 0; j < 5; ++j) {
            w(j) = normal(rng);
        }
        sx += nees_kinematic(kin, l * w);
        se += nees_extent(ext, matvar::iw_sample(rng, ext.params()).matrix());
    }
    EXPECT_NEAR(sx / n, 1.0, 0.01);
    EXPECT_NEAR(se / n, 1.0, 0.05);
}

TEST(Tracker, SingleModeImmMatchesDirectChain) {
    auto est = bartlett_imm_estimator();
    est.modes.resize(1);
    est.stay_probability = 1.0;
    const correction::SensorModel sensor{kinematics::position_selector(4), Eigen::Matrix2d::Identity() * 2.25, 0.25};
    Tracker tracker(est, 1.0, sensor);
    kinematics::GaussianState kin{Eigen::Vector4d(0.0, 0.0, 30.0, 0.0), Eigen::Vector4d(100, 100, 25, 25).asDiagonal()};
    extent::ExtentState ext{10.0, SpdMatrix::diagonal({4 * 625.0, 4 * 64.0})};
    tracker.initialize(kin, ext);
    const auto truth = generate_truth(constant_turn_scenario());
    Rng rng(93);
    for (std::size_t k = 0; k < 25; ++k) {
        const auto meas = generate_measurements(rng, truth.steps[k], sensor.r, 10.0);
        if (k > 0) {
            tracker.predict();
            const Eigen::MatrixXd q = extent::resolve_noise(est.modes[0].q, ext.v_mat);
            ext = extent::predict_bartlett(ext, Eigen::Matrix2d::Identity(), q,
                                           extent::v_setting_volume_coupled(ext.nu, q, ext.v_mat));
            kin = kinematics::predict_kinematic(kin, kinematics::MotionModel::constant_velocity(1.0, est.modes[0].q_tilde));
        }
        tracker.correct(meas);
        const auto res = correction::correct(kin, ext, meas, sensor);
        kin = res.kin;
        ext = res.extent;
        const auto e = tracker.estimate();
        EXPECT_LT((e.kin.mean - kin.mean).norm(), 1e-9 * kin.mean.norm());
        EXPECT_NEAR(e.extent.nu, ext.nu, 1e-9 * ext.nu);
        EXPECT_LT(testing::max_rel_error(e.extent.v_mat.matrix(), ext.v_mat.matrix()), 1e-9);
        EXPECT_EQ(tracker.mode_probabilities().size(), 1u);
    }
}

TEST(Tracker, DuplicatedModesCollapseToSingleMode) {
    auto one = bartlett_imm_estimator();
    one.modes.resize(1);
    auto two = one;
    two.modes.push_back(one.modes[0]);
    two.stay_probability = 0.9;
    const correction::SensorModel sensor{kinematics::position_selector(4), Eigen::Matrix2d::Identity() * 2.25, 0.25};
    Tracker a(one, 1.0, sensor);
    Tracker b(two, 1.0, sensor);
    const kinematics::GaussianState kin{Eigen::Vector4d(0.0, 0.0, 30.0, 0.0), Eigen::Matrix4d::Identity() * 25.0};
    const extent::ExtentState ext{10.0, SpdMatrix::diagonal({4 * 625.0, 4 * 64.0})};
    a.initialize(kin, ext);
    b.initialize(kin, ext);
    const auto truth = generate_truth(constant_turn_scenario());
    Rng rng(94);
    for (std::size_t k = 0; k < 30; ++k) {
        const auto meas = generate_measurements(rng, truth.steps[k], sensor.r, 10.0);
        if (k > 0) {
            a.predict();
            b.predict();
        }
        a.correct(meas);
        b.correct(meas);
        const auto ea = a.estimate();
        const auto eb = b.estimate();
        EXPECT_LT((ea.kin.mean - eb.kin.mean).norm(), 1e-8 * ea.kin.mean.norm());
        EXPECT_NEAR(ea.extent.nu, eb.extent.nu, 1e-8 * ea.extent.nu);
        EXPECT_LT(testing::max_rel_error(eb.extent.v_mat.matrix(), ea.extent.v_mat.matrix()), 1e-8);
        EXPECT_NEAR(b.mode_probabilities()[0], 0.5, 1e-12);
    }
}

TEST(Tracker, ModeProbabilitiesFavourQuietModeOnStraightLeg) {
    const auto est = bartlett_imm_estimator();
    ASSERT_GE(est.modes.size(), 2u);
    const correction::SensorModel sensor{kinematics::position_selector(4), Eigen::Matrix2d::Identity() * 2.25, 0.25};
    Tracker tracker(est, 1.0, sensor);
    tracker.initialize({Eigen::Vector4d(0.0, 0.0, 30.0, 0.0), Eigen::Matrix4d::Identity() * 4.0},
                       {10.0, SpdMatrix::diagonal({4 * 625.0, 4 * 64.0})});
    const auto truth = generate_truth(constant_turn_scenario());
    Rng rng(95);
    for (std::size_t k = 0; k < 18; ++k) {
        if (k > 0) {
            tracker.predict();
        }
        tracker.correct(generate_measurements(rng, truth.steps[k], sensor.r, 10.0));
        double total = 0.0;
        for (double p : tracker.mode_probabilities()) {
            EXPECT_GE(p, 0.0);
            total += p;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
    EXPECT_GT(tracker.mode_probabilities().front(), 0.5);
}

TEST(MonteCarlo, ReportDoesNotDependOnThreadCount) {
    const auto cfg = small_scenario(24);
    const auto one = run_monte_carlo(cfg, 1);
    const auto eight = run_monte_carlo(cfg, 8);
    ASSERT_EQ(one.estimators.size(), eight.estimators.size());
    for (std::size_t e = 0; e < one.estimators.size(); ++e) {
        ASSERT_EQ(one.estimators[e].steps.size(), eight.estimators[e].steps.size());
        for (std::size_t k = 0; k < one.estimators[e].steps.size(); ++k) {
            const auto& a = one.estimators[e].steps[k];
            const auto& b = eight.estimators[e].steps[k];
            EXPECT_EQ(a.gw, b.gw);
            EXPECT_EQ(a.anees_x, b.anees_x);
            EXPECT_EQ(a.anees_ext, b.anees_ext);
            EXPECT_EQ(a.nu, b.nu);
            EXPECT_EQ(a.logdet_v, b.logdet_v);
        }
    }
}

TEST(MonteCarlo, RunStreamsAreIndependentOfEstimatorSet) {
    auto cfg = small_scenario(1);
    const auto truth = generate_truth(cfg);
    const auto all = run_single(cfg, truth, 3);
    cfg.estimators = {cfg.estimators.back()};
    const auto last = run_single(cfg, truth, 3);
    ASSERT_EQ(last.size(), 1u);
    for (std::size_t k = 0; k < last[0].steps.size(); ++k) {
        EXPECT_EQ(last[0].steps[k].gw, all.back().steps[k].gw);
    }
}

TEST(MonteCarlo, NoiseFreeRunIsNearExactOnStraightLeg) {
    auto cfg = small_scenario(1);
    cfg.noise_free = true;
    const auto report = run_monte_carlo(cfg, 1);
    for (const auto& e : report.estimators) {
        EXPECT_EQ(e.diverged_runs, 0);
        EXPECT_LT(e.steps.front().gw, 1e-6) << e.name;
        for (int k = 0; k < 18; ++k) {
            EXPECT_LT(e.steps[static_cast<std::size_t>(k)].gw, 0.5) << e.name << " k=" << k;
        }
    }
}

TEST(MonteCarlo, DivergedRunsAreReportedAndExcluded) {
    auto cfg = small_scenario(5);
    auto broken = proposed_estimator();
    broken.name = "broken";
    broken.v_rule = extent::FixedDof{5.0};
    cfg.estimators.push_back(broken);
    const auto report = run_monte_carlo(cfg, 2);
    ASSERT_EQ(report.estimators.size(), 4u);
    const auto& b = report.estimators.back();
    EXPECT_EQ(b.diverged_runs, 5);
    EXPECT_EQ(b.valid_runs, 0);
    ASSERT_EQ(b.divergence_messages.size(), 5u);
    EXPECT_FALSE(b.divergence_messages.front().empty());
    for (std::size_t e = 0; e + 1 < report.estimators.size(); ++e) {
        EXPECT_EQ(report.estimators[e].diverged_runs, 0);
        EXPECT_EQ(report.estimators[e].valid_runs, 5);
    }
}

TEST(Scenario, ValidationRejectsBadInput) {
    auto cfg = constant_turn_scenario();
    cfg.segments.clear();
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = constant_turn_scenario();
    cfg.init.nu = 6.0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = constant_turn_scenario();
    cfg.estimators[1].n = 3.0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = constant_turn_scenario();
    cfg.n_runs = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
}

}  // namespace
}  // namespace etrack::sim
