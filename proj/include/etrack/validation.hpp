#pragma once

#include "etrack/extent.hpp"
#include "etrack/rng.hpp"
#include "etrack/spd_matrix.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace etrack::validation {

/// Scalar special functions used by the inequality checks. Swapping in a perturbed
/// implementation lets the suite demonstrate that it detects faults.
struct SpecialFunctionSet {
    std::function<double(double)> digamma;
    std::function<double(double)> trigamma;

    [[nodiscard]] static SpecialFunctionSet standard();
    /// Trigamma shifted by `offset`.
    [[nodiscard]] static SpecialFunctionSet trigamma_offset(double offset);
};

struct OracleResult {
    std::string id;
    /// Mathematical result exercised, one of coverage_labels().
    std::string coverage;
    std::string description;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
    double seconds = 0.0;
};

struct SuiteOptions {
    std::uint64_t seed = 20240611;
    /// Monte-Carlo sample size of the moment checks.
    std::size_t draws = 1'000'000;
    /// Sample size of the Taylor-expectation check.
    std::size_t taylor_draws = 1'000'000;
    SpecialFunctionSet functions = SpecialFunctionSet::standard();
};

/// Every result the suite can cover, in report order.
[[nodiscard]] std::vector<std::string> coverage_labels();

[[nodiscard]] std::vector<OracleResult> run_suite(const SuiteOptions& options);

// Individual checks.

[[nodiscard]] OracleResult check_process_noise_moments(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_transition_inverse_mean(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_transition_conjugacy(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_projected_transition_conjugacy(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_projection_fixed_point(Rng& rng, std::size_t cases);
[[nodiscard]] OracleResult check_projection_concavity(Rng& rng, std::size_t cases, const SpecialFunctionSet& fns);
[[nodiscard]] OracleResult check_projection_unimodal(Rng& rng, std::size_t cases);
[[nodiscard]] OracleResult check_iw_inverse_mean(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_iw_lndet_mean(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_vec_identity(Rng& rng, std::size_t cases);
[[nodiscard]] OracleResult check_trigamma_inequality(Rng& rng, std::size_t cases, const SpecialFunctionSet& fns);
[[nodiscard]] OracleResult check_trigamma_vec_inequality(Rng& rng, std::size_t cases, const SpecialFunctionSet& fns);
[[nodiscard]] OracleResult check_multigamma_derivative(Rng& rng, std::size_t cases, const SpecialFunctionSet& fns);
[[nodiscard]] OracleResult check_power_derivative(Rng& rng, std::size_t cases);
[[nodiscard]] OracleResult check_volume_result(Rng& rng, std::size_t draws);
[[nodiscard]] OracleResult check_closed_form_volume(Rng& rng, std::size_t cases);
[[nodiscard]] OracleResult check_taylor_expectations(Rng& rng, std::size_t draws);

/// Monte-Carlo estimates of E[(R V R^T)^{-1}] and E[R V R^T] with R the rotation by
/// dt * omega and omega ~ N(omega_mean, omega_std^2).
struct RotationMoments {
    Eigen::Matrix2d c1;
    Eigen::Matrix2d c2;
};

[[nodiscard]] RotationMoments rotation_moments_monte_carlo(Rng& rng, const Eigen::Matrix2d& v_bar, double omega_mean,
                                                           double omega_std, double dt, std::size_t draws);

/// Largest entry-wise error |a - b| relative to the largest |b| entry.
[[nodiscard]] double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// vec(V^{-1})^T (V kron V) vec(V^{-1}) formed explicitly.
[[nodiscard]] double vec_kronecker_form(const Eigen::MatrixXd& v);

/// Random SPD matrix with eigenvalues in [lo, hi] and a Haar-random basis.
[[nodiscard]] Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index d, double lo, double hi);

}  // namespace etrack::validation
