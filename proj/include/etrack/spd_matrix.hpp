#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace etrack {

/// Raised when a scalar argument leaves the domain of a function
/// (degrees of freedom too small, negative argument to a special function, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a matrix that must be symmetric positive definite is not.
/// Carries the 1-based index of the first leading minor whose Cholesky pivot failed
/// (0 when the failure is not tied to a specific pivot, e.g. non-finite entries).
class NotSpdError : public std::domain_error {
public:
    NotSpdError(const std::string& what, Eigen::Index leading_minor)
        : std::domain_error(what), leading_minor_(leading_minor) {}

    [[nodiscard]] Eigen::Index leading_minor() const { return leading_minor_; }

private:
    Eigen::Index leading_minor_;
};

/// (A + A^T) / 2.
[[nodiscard]] Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Lower Cholesky factor of a symmetric matrix. Throws NotSpdError naming the first
/// leading minor whose pivot is <= 1e-12 times the largest diagonal entry.
[[nodiscard]] Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a);

/// True when every eigenvalue of sym(a) is >= -tol * max(1, max|eig|).
[[nodiscard]] bool is_positive_semidefinite(const Eigen::MatrixXd& a, double tol = 1e-10);

/// Symmetric positive definite matrix with its Cholesky factor computed once on
/// construction. The stored value is always exactly symmetric.
class SpdMatrix {
public:
    explicit SpdMatrix(const Eigen::MatrixXd& a);

    [[nodiscard]] static SpdMatrix identity(Eigen::Index d);
    [[nodiscard]] static SpdMatrix diagonal(std::initializer_list<double> entries);
    [[nodiscard]] static SpdMatrix diagonal(const Eigen::VectorXd& entries);

    [[nodiscard]] Eigen::Index dim() const { return value_.rows(); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return value_; }
    [[nodiscard]] const Eigen::MatrixXd& lower() const { return lower_; }
    [[nodiscard]] double operator()(Eigen::Index r, Eigen::Index c) const { return value_(r, c); }

    [[nodiscard]] double logdet() const;
    [[nodiscard]] double determinant() const;
    [[nodiscard]] Eigen::MatrixXd inverse() const;
    /// A^{-1} b via the cached factor.
    [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

private:
    Eigen::MatrixXd value_;
    Eigen::MatrixXd lower_;
};

/// L with L L^T = a.
[[nodiscard]] Eigen::MatrixXd cholesky(const SpdMatrix& a);

/// Unique SPD S with S S = a, from the symmetric eigendecomposition.
[[nodiscard]] SpdMatrix sym_sqrt(const SpdMatrix& a);

/// Unique SPD S with S S = a^{-1}.
[[nodiscard]] SpdMatrix sym_inv_sqrt(const SpdMatrix& a);

/// Symmetric square root of a positive semidefinite matrix; negative round-off
/// eigenvalues are truncated to zero.
[[nodiscard]] Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a);

/// ln|a| from the Cholesky diagonal.
[[nodiscard]] double logdet(const SpdMatrix& a);

}  // namespace etrack
