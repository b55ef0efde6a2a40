#include "etrack/special_functions.hpp"
#include "etrack/spd_matrix.hpp"
#include "oracles.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <numbers>

namespace etrack {
namespace {

TEST(Cholesky, IdentityAndDiagonal) {
    EXPECT_TRUE(cholesky_lower(Eigen::Matrix2d::Identity()).isApprox(Eigen::Matrix2d::Identity(), 0.0));
    const Eigen::Matrix2d l = cholesky_lower(Eigen::Vector2d(4.0, 9.0).asDiagonal().toDenseMatrix());
    EXPECT_TRUE(l.isApprox(Eigen::Vector2d(2.0, 3.0).asDiagonal().toDenseMatrix(), 1e-15));
}

TEST(Cholesky, ReconstructsRandomSpd) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index d = 1 + trial % 6;
        const Eigen::MatrixXd a = testing::random_spd(rng, d, 1e-3, 1e3);
        const SpdMatrix s(a);
        const Eigen::MatrixXd l = cholesky(s);
        EXPECT_LT((l * l.transpose() - a).norm() / a.norm(), 1e-10);
        EXPECT_TRUE(l.isLowerTriangular());
    }
}

TEST(Cholesky, ReportsFailingLeadingMinor) {
    Eigen::Matrix3d a;
    a << 4, 0, 0, 0, 1, 2, 0, 2, 1;
    try {
        (void)cholesky_lower(a);
        FAIL() << "indefinite matrix accepted";
    } catch (const NotSpdError& e) {
        EXPECT_EQ(e.leading_minor(), 3);
    }
    EXPECT_THROW(SpdMatrix(Eigen::Matrix2d::Zero()), NotSpdError);
    Eigen::Matrix2d nan = Eigen::Matrix2d::Identity();
    nan(0, 1) = std::nan("");
    EXPECT_THROW(SpdMatrix{nan}, NotSpdError);
}

TEST(SpdMatrix, SymmetrizesOnConstruction) {
    Eigen::Matrix2d a;
    a << 2.0, 0.5 + 1e-13, 0.5, 1.0;
    const SpdMatrix s(a);
    EXPECT_EQ(s(0, 1), s(1, 0));
    EXPECT_NEAR(s(0, 1), 0.5 + 0.5e-13, 1e-16);
}

TEST(SymSqrt, KnownValuesAndSquaring) {
    EXPECT_TRUE(sym_sqrt(SpdMatrix::identity(2)).matrix().isApprox(Eigen::Matrix2d::Identity(), 1e-15));
    EXPECT_TRUE(sym_sqrt(SpdMatrix::diagonal({16.0, 25.0}))
                    .matrix()
                    .isApprox(Eigen::Vector2d(4.0, 5.0).asDiagonal().toDenseMatrix(), 1e-15));
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::MatrixXd a = testing::random_spd(rng, 1 + trial % 5, 1e-2, 1e2);
        const Eigen::MatrixXd s = sym_sqrt(SpdMatrix(a)).matrix();
        EXPECT_LT((s * s - a).norm(), 1e-10);
        EXPECT_LT((s - s.transpose()).norm(), 1e-14);
        const Eigen::MatrixXd si = sym_inv_sqrt(SpdMatrix(a)).matrix();
        EXPECT_LT((si * a * si - Eigen::MatrixXd::Identity(a.rows(), a.cols())).norm(), 1e-10);
    }
}

TEST(PsdSqrt, AcceptsSingularInput) {
    Eigen::Matrix2d a;
    a << 1.0, 1.0, 1.0, 1.0;
    const Eigen::MatrixXd s = psd_sqrt(a);
    EXPECT_LT((s * s - a).norm(), 1e-12);
    EXPECT_TRUE(psd_sqrt(Eigen::Matrix2d::Zero()).isZero(0.0));
}

TEST(Logdet, KnownValuesAndEigenOracle) {
    EXPECT_DOUBLE_EQ(logdet(SpdMatrix::identity(3)), 0.0);
    EXPECT_NEAR(logdet(SpdMatrix::diagonal({std::numbers::e, std::numbers::e})), 2.0, 1e-15);
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::MatrixXd a = testing::random_spd(rng, 1 + trial % 6, 1e-3, 1e3);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        EXPECT_NEAR(logdet(SpdMatrix(a)), es.eigenvalues().array().log().sum(), 1e-10);
    }
}

TEST(SpecialFunctions, AnalyticValues) {
    EXPECT_NEAR(digamma(1.0), -0.57721566490153286, 1e-15);
    EXPECT_NEAR(trigamma(1.0), std::numbers::pi * std::numbers::pi / 6.0, 1e-15);
    EXPECT_NEAR(digamma(0.5), -0.57721566490153286 - 2.0 * std::numbers::ln2, 1e-14);
    EXPECT_NEAR(trigamma(0.5), std::numbers::pi * std::numbers::pi / 2.0, 1e-14);
}

TEST(SpecialFunctions, MatchBoostReference) {
    // Relative tolerance: near x = 1e-3 the values reach 1e6, where 1e-12 absolute is below one ulp.
    for (double lx = -3.0; lx <= 3.0; lx += 0.01) {
        const double x = std::pow(10.0, lx);
        const double dg = boost::math::digamma(x);
        const double tg = boost::math::trigamma(x);
        EXPECT_NEAR(digamma(x), dg, 1e-12 * std::max(1.0, std::abs(dg))) << "x = " << x;
        EXPECT_NEAR(trigamma(x), tg, 1e-12 * std::max(1.0, std::abs(tg))) << "x = " << x;
    }
}

TEST(SpecialFunctions, Recurrences) {
    for (double x = 0.1; x <= 100.0; x += 0.0997) {
        EXPECT_NEAR(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-12) << x;
        EXPECT_NEAR(trigamma(x + 1.0) - trigamma(x), -1.0 / (x * x), 1e-12 * std::max(1.0, trigamma(x))) << x;
    }
}

TEST(SpecialFunctions, DomainErrors) {
    EXPECT_THROW((void)digamma(0.0), DomainError);
    EXPECT_THROW((void)digamma(-1.5), DomainError);
    EXPECT_THROW((void)trigamma(0.0), DomainError);
    EXPECT_THROW((void)ln_multigamma(2, 0.5), DomainError);
    EXPECT_THROW((void)ln_multigamma(0, 3.0), DomainError);
}

TEST(LnMultigamma, ReductionsAndProduct) {
    for (double a : {0.5, 1.0, 2.5}) {
        EXPECT_NEAR(ln_multigamma(1, a), std::lgamma(a), 1e-14);
    }
    for (int d = 1; d <= 5; ++d) {
        for (double a : {d * 0.5 + 0.01, 3.7, 40.0}) {
            double expected = d * (d - 1) / 4.0 * std::log(std::numbers::pi);
            for (int i = 1; i <= d; ++i) {
                expected += std::lgamma(a + (1.0 - i) / 2.0);
            }
            EXPECT_NEAR(ln_multigamma(d, a), expected, 1e-12 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST(DigammaSums, MatchTermwiseReference) {
    for (int d = 1; d <= 4; ++d) {
        for (double nu = 2.0 * d + 0.1; nu < 2.0 * d + 50.0; nu += 1.3) {
            double s0 = 0.0;
            double s1 = 0.0;
            for (int i = 1; i <= d; ++i) {
                s0 += boost::math::digamma((nu - d - i) / 2.0);
                s1 += boost::math::trigamma((nu - d - i) / 2.0);
            }
            EXPECT_NEAR(iw_digamma_sum(nu, d), s0, 1e-11 * std::max(1.0, std::abs(s0)));
            EXPECT_NEAR(iw_trigamma_sum(nu, d), s1, 1e-11 * std::max(1.0, s1));
        }
    }
}

TEST(Properties, TrigammaSumBound) {
    Rng rng(14);
    std::uniform_int_distribution<int> dim(1, 4);
    std::uniform_real_distribution<double> offset(0.0, 50.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const int d = dim(rng);
        const double nu = 2.0 * d + std::max(offset(rng), 1e-9);
        EXPECT_GT(iw_trigamma_sum(nu, d), 2.0 * d / (nu - d - 1.0)) << "d = " << d << ", nu = " << nu;
    }
}

TEST(Properties, VecKroneckerIdentity) {
    Rng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index d = 1 + trial % 5;
        const Eigen::MatrixXd v = testing::random_spd(rng, d, 0.1, 10.0);
        const Eigen::MatrixXd vi = v.inverse();
        const Eigen::VectorXd vec = Eigen::Map<const Eigen::VectorXd>(vi.data(), vi.size());
        const Eigen::MatrixXd kron = Eigen::kroneckerProduct(v, v);
        EXPECT_NEAR(vec.dot(kron * vec), static_cast<double>(d), 1e-9);
    }
}

}  // namespace
}  // namespace etrack
