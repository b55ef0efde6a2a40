#pragma once

namespace etrack {

/// Digamma function psi_0(x), x > 0.
[[nodiscard]] double digamma(double x);

/// Trigamma function psi_1(x), x > 0.
[[nodiscard]] double trigamma(double x);

/// ln Gamma_d(a) for the multivariate gamma function, a > (d - 1) / 2:
/// d(d-1)/4 ln(pi) + sum_{i=1..d} ln Gamma(a + (1 - i) / 2).
[[nodiscard]] double ln_multigamma(int d, double a);

/// sum_{i=1..d} psi_0((nu - d - i) / 2); the log-determinant correction of an
/// inverse Wishart with d x d argument and nu degrees of freedom.
[[nodiscard]] double iw_digamma_sum(double nu, int d);

/// sum_{i=1..d} psi_1((nu - d - i) / 2).
[[nodiscard]] double iw_trigamma_sum(double nu, int d);

}  // namespace etrack
