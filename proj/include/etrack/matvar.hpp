#pragma once

#include "etrack/rng.hpp"
#include "etrack/spd_matrix.hpp"

#include <Eigen/Dense>

namespace etrack::matvar {

/// IW_d(X | nu, V) with density
///   etr(-V X^{-1} / 2) |V|^{(nu-d-1)/2} / (2^{d(nu-d-1)/2} Gamma_d((nu-d-1)/2) |X|^{nu/2}),
/// defined for nu > 2d. E[X] = V / (nu - 2d - 2) when nu > 2d + 2.
struct InverseWishartParams {
    double nu;
    SpdMatrix v_mat;

    [[nodiscard]] int dim() const { return static_cast<int>(v_mat.dim()); }
    /// Throws DomainError unless nu > 2d.
    void validate() const;
};

/// W_d(X | w, W), defined for w > d - 1. E[X] = w W.
struct WishartParams {
    double w;
    SpdMatrix w_mat;

    [[nodiscard]] int dim() const { return static_cast<int>(w_mat.dim()); }
    void validate() const;
};

/// Parameters of the non-central inverse Wishart IW_d(X | v, Sigma, Theta). The density itself
/// is not evaluated; the family is exercised through transition_sample and its moments.
struct NcIwParams {
    double v;
    SpdMatrix sigma;
    Eigen::MatrixXd theta;

    [[nodiscard]] int dim() const { return static_cast<int>(sigma.dim()); }
    /// Throws DomainError unless v > 2d and theta is symmetric positive semidefinite of matching size.
    void validate() const;
};

/// Sufficient statistics E[X^{-1}] and E[ln|X|] of a distribution over SPD matrices;
/// these are exactly what a KL projection onto the inverse Wishart family consumes.
struct LogDetMoments {
    Eigen::MatrixXd e_inv;
    double e_lndet;
};

[[nodiscard]] double iw_logpdf(const SpdMatrix& x, const InverseWishartParams& p);
[[nodiscard]] double wishart_logpdf(const SpdMatrix& x, const WishartParams& p);

/// E[X^{-1}] = (nu - d - 1) V^{-1},
/// E[ln|X|]  = ln|V| - d ln 2 - sum_i psi_0((nu - d - i) / 2).
[[nodiscard]] LogDetMoments iw_entropy_moments(const InverseWishartParams& p);

/// E[X]; requires nu > 2d + 2.
[[nodiscard]] Eigen::MatrixXd iw_mean(const InverseWishartParams& p);

/// Element-wise variances Var(X_ij) of an inverse Wishart variate; requires nu > 2d + 4.
[[nodiscard]] Eigen::MatrixXd iw_elementwise_variance(const InverseWishartParams& p);

/// Bartlett-decomposition draw. Non-integer w is supported through gamma variates
/// on the diagonal of the triangular factor.
[[nodiscard]] SpdMatrix wishart_sample(Rng& rng, const WishartParams& p);

/// Wishart draw with a positive semidefinite scale matrix (zero scale returns zero).
[[nodiscard]] Eigen::MatrixXd wishart_sample_psd(Rng& rng, double w, const Eigen::MatrixXd& scale);

/// X = S^{-1}, S ~ W_d(nu - d - 1, V^{-1}).
[[nodiscard]] SpdMatrix iw_sample(Rng& rng, const InverseWishartParams& p);

/// Process noise of the extent transition model: W ~ W_d(n, Q / n), n = v - d - 1.
[[nodiscard]] Eigen::MatrixXd process_noise_sample(Rng& rng, const Eigen::MatrixXd& q, double v);

/// One draw of the extent transition model
///   X_{k+1}^{-1/2} = M^{-T} (X_k^{-1/2} + n^{1/2} W^{1/2}),  W ~ W_d(n, Q/n),  n = v - d - 1,
/// realised with rectangular d x n square-root factors. X_k^{-1/2} is the Cholesky factor of
/// X_k^{-1} padded with zero columns to width n, so conditionally on X_k the draw is the
/// non-central inverse Wishart with non-centrality built from X_k^{-1} itself. Requires
/// n >= d. When n is not an integer the n - d purely random columns are replaced by their
/// Wishart sum W_d(n - d, Q), which needs n - d = 0 or n - d > d - 1.
[[nodiscard]] SpdMatrix transition_sample(Rng& rng, const SpdMatrix& x_prev, const Eigen::MatrixXd& m,
                                          const Eigen::MatrixXd& q, double v);

/// The same transition model with the factor of X_k^{-1} taken as L O, where L is the
/// Cholesky factor, O is a Haar-distributed d x n_k matrix with orthonormal rows and
/// n_k = prior_nu - d - 1; the first n columns are kept (identity-padding H_1). When X_k
/// is itself IW(prior_nu, V) this reproduces the marginal prediction IW(v, M V (I + QV)^{-1} M^T)
/// for any v <= prior_nu. Requires integer n_k and n with d <= n <= n_k.
[[nodiscard]] SpdMatrix transition_sample_projected(Rng& rng, const SpdMatrix& x_prev, double prior_nu,
                                                    const Eigen::MatrixXd& m, const Eigen::MatrixXd& q,
                                                    double v);

}  // namespace etrack::matvar
