#pragma once

#include "etrack/kinematics.hpp"
#include "etrack/matvar.hpp"
#include "etrack/spd_matrix.hpp"

#include <Eigen/Dense>

#include <functional>
#include <variant>

namespace etrack::extent {

/// Inverse Wishart extent density IW_d(X | nu, V).
struct ExtentState {
    double nu;
    SpdMatrix v_mat;

    [[nodiscard]] int dim() const { return static_cast<int>(v_mat.dim()); }
    /// E[X] = V / (nu - 2d - 2).
    [[nodiscard]] Eigen::MatrixXd expected() const;
    [[nodiscard]] matvar::InverseWishartParams params() const { return {nu, v_mat}; }
};

/// Planar rotation by `angle` radians.
[[nodiscard]] Eigen::Matrix2d rotation_matrix(double angle);

/// Rotation by dt * omega, omega being the fifth entry of a constant-turn state.
[[nodiscard]] Eigen::MatrixXd rotation_m(const Eigen::VectorXd& x, double dt);

/// Kinematic-state dependent transformation M(x) applied congruently to the extent.
class ExtentTransform {
public:
    using Fn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
    enum class Kind { kRotation, kConstant, kGeneral };

    /// rotation_m with the turn rate read from `turn_rate_index`.
    [[nodiscard]] static ExtentTransform rotation(double dt, Eigen::Index turn_rate_index = 4);
    /// M independent of x.
    [[nodiscard]] static ExtentTransform constant(const Eigen::MatrixXd& m);
    /// Arbitrary twice-differentiable M(x); its Taylor terms use central differences.
    [[nodiscard]] static ExtentTransform general(Fn fn);

    [[nodiscard]] Eigen::MatrixXd operator()(const Eigen::VectorXd& x) const;
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] Eigen::Index turn_rate_index() const { return turn_rate_index_; }

private:
    ExtentTransform() = default;

    Kind kind_ = Kind::kConstant;
    double dt_ = 0.0;
    Eigen::Index turn_rate_index_ = 4;
    Eigen::MatrixXd constant_;
    Fn fn_;
};

/// V_bar = V (I + Q V)^{-1}, evaluated in the symmetric form (V^{-1} + Q)^{-1}.
/// Q may be any positive semidefinite matrix, including zero.
[[nodiscard]] SpdMatrix intermediate_v(const SpdMatrix& v_mat, const Eigen::MatrixXd& q);

/// Weight on the second-derivative term of the expectation expansions.
/// kUnit reproduces the expansion as printed (no 1/2); kHalf is the standard
/// second-order expectation E[f(x)] ~ f(m) + 1/2 sum_ij f_ij P_ij.
enum class TaylorWeight { kHalf, kUnit };

[[nodiscard]] constexpr double taylor_weight_value(TaylorWeight w) {
    return w == TaylorWeight::kHalf ? 0.5 : 1.0;
}

/// C1 ~ E[(M V_bar M^T)^{-1}], C2 ~ E[M V_bar M^T], C3 ~ E[ln|M V_bar M^T|] under x ~ N(m, P).
struct TaylorExpectations {
    SpdMatrix c1;
    SpdMatrix c2;
    double c3;
};

[[nodiscard]] TaylorExpectations taylor_expectations(const ExtentTransform& transform, const SpdMatrix& v_bar,
                                                     const kinematics::GaussianState& kin,
                                                     TaylorWeight weight = TaylorWeight::kUnit);

/// KL projection objective E_p[ln IW(X | nu, V)] up to a constant, for moments of p.
[[nodiscard]] double projection_objective(double nu, const Eigen::MatrixXd& v_mat,
                                          const matvar::LogDetMoments& moments);

struct ProjectionOptions {
    /// Right end of the degrees-of-freedom bracket.
    double upper_bracket = 1e6;
    /// Residual tolerance on the stationarity condition in nu.
    double tolerance = 1e-10;
};

/// The inverse Wishart minimising KL(p || IW) given p's E[X^{-1}] and E[ln|X|]:
/// V* = (nu* - d - 1) E[X^{-1}]^{-1}, with nu* the unique root of
///   d ln(nu - d - 1) - sum_i psi_0((nu - d - i)/2) = ln|E[X^{-1}]| + d ln 2 + E[ln|X|].
/// Throws DomainError when the moments admit no root in (2d + 1e-6, upper_bracket].
[[nodiscard]] ExtentState kld_project_to_iw(const matvar::LogDetMoments& moments,
                                            const ProjectionOptions& options = {});

/// Optimal predicted dof from the root equation in (v, C1, C3).
[[nodiscard]] double nu_optimal(double v, const SpdMatrix& c1, double c3, int d);

/// Closed-form predicted dof matching the volume of the expected extent:
///   nu = 2d + 2 + (d + 1) rho / ((rho + d + 1) |C1 C2|^{1/d} - rho),  rho = v - 2d - 2.
[[nodiscard]] double nu_closed_form(double v, const SpdMatrix& c1, const SpdMatrix& c2, int d);

/// Exponential-forgetting heuristic with time constant tau.
[[nodiscard]] ExtentState predict_feldmann(const ExtentState& extent, double dt, double tau);

/// Kinematics-independent non-central inverse Wishart prediction: nu' = v, V' = M V_bar M^T.
[[nodiscard]] ExtentState predict_bartlett(const ExtentState& extent, const Eigen::MatrixXd& m,
                                           const Eigen::MatrixXd& q, double v);

/// Q given as a fixed matrix.
struct FixedNoise {
    Eigen::MatrixXd q;
};
/// Q = scale * V^{-1}.
struct InverseScaledNoise {
    double scale;
};
/// Q = scale * |V|^{-1/d} I.
struct DeterminantScaledNoise {
    double scale;
};
using NoiseRule = std::variant<FixedNoise, InverseScaledNoise, DeterminantScaledNoise>;

[[nodiscard]] Eigen::MatrixXd resolve_noise(const NoiseRule& rule, const SpdMatrix& v_mat);

struct FixedDof {
    double v;
};
/// v = 2d + 2 + (nu - 2d - 2) |I + Q V|^{-1/d}.
struct VolumeCoupledDof {};
/// v = 2d + 2 + (nu - 2d - 2) |C2^{-1} V|^{-1/d}.
struct VolumePreservingDof {};
using DofRule = std::variant<FixedDof, VolumeCoupledDof, VolumePreservingDof>;

struct TransitionConfig {
    NoiseRule q = FixedNoise{};
    ExtentTransform transform = ExtentTransform::constant(Eigen::Matrix2d::Identity());
    DofRule v_rule = VolumePreservingDof{};
};

enum class NuMode { kClosedForm, kOptimal };

struct PredictionOptions {
    NuMode nu_mode = NuMode::kClosedForm;
    TaylorWeight taylor_weight = TaylorWeight::kUnit;
};

/// Intermediate quantities of one proposed prediction step.
struct ProposedPrediction {
    ExtentState state;
    double v;
    SpdMatrix v_bar;
    TaylorExpectations expectations;
};

[[nodiscard]] ProposedPrediction predict_proposed_detailed(const ExtentState& extent,
                                                           const kinematics::GaussianState& kin,
                                                           const TransitionConfig& cfg,
                                                           const PredictionOptions& options = {});

[[nodiscard]] ExtentState predict_proposed(const ExtentState& extent, const kinematics::GaussianState& kin,
                                           const TransitionConfig& cfg, const PredictionOptions& options = {});

/// Sufficient statistics of the Wishart-transition prediction marginal
///   X' | x, X ~ W_d(n, M_x X M_x^T / n),  X ~ IW(nu, V),  x ~ N(m, P).
[[nodiscard]] matvar::LogDetMoments granstrom_moments(const ExtentState& extent,
                                                      const kinematics::GaussianState& kin,
                                                      const ExtentTransform& transform, double n,
                                                      TaylorWeight weight = TaylorWeight::kUnit);

/// Wishart-transition baseline: one KL projection of granstrom_moments.
[[nodiscard]] ExtentState predict_granstrom(const ExtentState& extent, const kinematics::GaussianState& kin,
                                            const ExtentTransform& transform, double n,
                                            TaylorWeight weight = TaylorWeight::kUnit);

[[nodiscard]] double v_setting_volume_coupled(double nu, const Eigen::MatrixXd& q, const SpdMatrix& v_mat);

[[nodiscard]] double v_setting_volume_preserving(double nu, const SpdMatrix& v_mat, const SpdMatrix& c2);

/// Smallest admissible dof entering a predictor: nu must exceed 2d + 2 + 1e-9.
void require_predictable(const ExtentState& extent, const char* who);

}  // namespace etrack::extent
