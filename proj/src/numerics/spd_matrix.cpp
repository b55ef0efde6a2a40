#include "etrack/spd_matrix.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace etrack {

namespace {

constexpr double kPivotTolerance = 1e-12;

Eigen::VectorXd clamped_eigenvalues(const Eigen::VectorXd& values) {
    return values.cwiseMax(0.0);
}

}  // namespace

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw NotSpdError(fmt::format("cholesky: expected a non-empty square matrix, got {}x{}",
                                      a.rows(), a.cols()),
                          0);
    }
    if (!a.allFinite()) {
        throw NotSpdError("cholesky: matrix has non-finite entries", 0);
    }
    const Eigen::Index n = a.rows();
    const double scale = std::max(a.diagonal().maxCoeff(), 0.0);
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) {
            pivot -= l(j, k) * l(j, k);
        }
        if (!(pivot > kPivotTolerance * scale) || !(pivot > 0.0)) {
            throw NotSpdError(
                fmt::format("matrix is not positive definite: leading minor {} has pivot {:.6g}",
                            j + 1, pivot),
                j + 1);
        }
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = 0.5 * (a(i, j) + a(j, i));
            for (Eigen::Index k = 0; k < j; ++k) {
                s -= l(i, k) * l(j, k);
            }
            l(i, j) = s / ljj;
        }
    }
    return l;
}

bool is_positive_semidefinite(const Eigen::MatrixXd& a, double tol) {
    if (a.rows() != a.cols() || !a.allFinite()) {
        return false;
    }
    if (a.rows() == 0) {
        return true;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    return ev.minCoeff() >= -tol * scale;
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& a)
    : value_(symmetrize(a)), lower_(cholesky_lower(value_)) {}

SpdMatrix SpdMatrix::identity(Eigen::Index d) {
    return SpdMatrix(Eigen::MatrixXd::Identity(d, d));
}

SpdMatrix SpdMatrix::diagonal(std::initializer_list<double> entries) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(entries.size()));
    Eigen::Index i = 0;
    for (double e : entries) {
        v(i++) = e;
    }
    return diagonal(v);
}

SpdMatrix SpdMatrix::diagonal(const Eigen::VectorXd& entries) {
    return SpdMatrix(Eigen::MatrixXd(entries.asDiagonal()));
}

double SpdMatrix::logdet() const {
    return 2.0 * lower_.diagonal().array().log().sum();
}

double SpdMatrix::determinant() const {
    return std::exp(logdet());
}

Eigen::MatrixXd SpdMatrix::inverse() const {
    return symmetrize(solve(Eigen::MatrixXd::Identity(dim(), dim())));
}

Eigen::MatrixXd SpdMatrix::solve(const Eigen::MatrixXd& b) const {
    const auto l = lower_.triangularView<Eigen::Lower>();
    return l.transpose().solve(l.solve(b));
}

Eigen::MatrixXd cholesky(const SpdMatrix& a) {
    return a.lower();
}

SpdMatrix sym_sqrt(const SpdMatrix& a) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix());
    const Eigen::MatrixXd& u = es.eigenvectors();
    return SpdMatrix(u * clamped_eigenvalues(es.eigenvalues()).cwiseSqrt().asDiagonal() *
                     u.transpose());
}

SpdMatrix sym_inv_sqrt(const SpdMatrix& a) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix());
    const Eigen::MatrixXd& u = es.eigenvectors();
    return SpdMatrix(u * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                     u.transpose());
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
    const Eigen::MatrixXd& u = es.eigenvectors();
    return symmetrize(u * clamped_eigenvalues(es.eigenvalues()).cwiseSqrt().asDiagonal() *
                      u.transpose());
}

double logdet(const SpdMatrix& a) {
    return a.logdet();
}

}  // namespace etrack
