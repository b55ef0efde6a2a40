#include "etrack/extent.hpp"

#include "etrack/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace etrack::extent {

namespace {

constexpr double kDofFloorMargin = 1e-9;
constexpr double kBracketOffset = 1e-6;
constexpr int kMaxRootIterations = 300;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// d ln(nu - d - 1) - sum_i psi_0((nu - d - i)/2); strictly decreasing on (2d, inf)
// with limit d ln 2.
double dof_profile(double nu, int d) {
    return d * std::log(nu - d - 1.0) - iw_digamma_sum(nu, d);
}

double dof_profile_derivative(double nu, int d) {
    return d / (nu - d - 1.0) - 0.5 * iw_trigamma_sum(nu, d);
}

// Solves dof_profile(nu) = target by Newton steps kept inside a shrinking bracket.
double solve_dof(double target, int d, const ProjectionOptions& options) {
    double lo = 2.0 * d + kBracketOffset;
    double hi = options.upper_bracket;
    const double floor = d * std::numbers::ln2;
    if (!(target > floor) || !std::isfinite(target)) {
        throw DomainError(fmt::format(
            "kld_project_to_iw: inconsistent moments (profile target {} must exceed d ln 2 = {})", target,
            floor));
    }
    double r_lo = dof_profile(lo, d) - target;
    double r_hi = dof_profile(hi, d) - target;
    if (!(r_lo > 0.0) || !(r_hi < 0.0)) {
        throw DomainError(fmt::format(
            "kld_project_to_iw: no sign change for the dof root in ({}, {}] (residuals {}, {})", lo, hi,
            r_lo, r_hi));
    }
    // Large-nu asymptote: profile - d ln 2 ~ d(d + 1) / (2 (nu - d - 1)).
    double nu = d + 1.0 + 0.5 * d * (d + 1.0) / (target - floor);
    if (!(nu > lo && nu < hi)) {
        nu = 0.5 * (lo + hi);
    }
    for (int it = 0; it < kMaxRootIterations; ++it) {
        const double r = dof_profile(nu, d) - target;
        if (r == 0.0) {
            return nu;
        }
        if (r > 0.0) {
            lo = nu;
        } else {
            hi = nu;
        }
        const double step = r / dof_profile_derivative(nu, d);
        // Once inside the residual tolerance, keep polishing until the Newton step is at
        // round-off level; the profile is flat for large nu so a small residual alone
        // does not pin nu to full precision.
        if (std::abs(r) < options.tolerance && std::abs(step) <= 1e-13 * nu) {
            return nu - step;
        }
        double next = nu - step;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            return next;
        }
        nu = next;
    }
    return nu;
}

void require_square(const Eigen::MatrixXd& m, Eigen::Index d, const char* who) {
    if (m.rows() != d || m.cols() != d) {
        throw DomainError(fmt::format("{}: expected a {}x{} matrix, got {}x{}", who, d, d, m.rows(), m.cols()));
    }
}

Eigen::MatrixXd require_nonsingular(const Eigen::MatrixXd& m, const char* who) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (!(s.minCoeff() > 1e-12 * s.maxCoeff())) {
        throw DomainError(fmt::format("{}: transformation matrix is singular", who));
    }
    return m;
}

struct ConjugatedTerms {
    Eigen::MatrixXd value;
    Eigen::MatrixXd inverse;
    double logdet;
};

ConjugatedTerms conjugate(const ExtentTransform& transform, const SpdMatrix& v_bar, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd m = require_nonsingular(transform(x), "taylor_expectations");
    const Eigen::MatrixXd m_inv = m.inverse();
    const Eigen::MatrixXd inv = m_inv.transpose() * v_bar.inverse() * m_inv;
    const double logdet = v_bar.logdet() + 2.0 * std::log(std::abs(m.determinant()));
    return {symmetrize(m * v_bar.matrix() * m.transpose()), symmetrize(inv), logdet};
}

TaylorExpectations rotation_expectations(const ExtentTransform& transform, const SpdMatrix& v_bar,
                                         const kinematics::GaussianState& kin, double kappa) {
    if (v_bar.dim() != 2) {
        throw DomainError("taylor_expectations: rotation transform needs a 2x2 extent");
    }
    const Eigen::Index idx = transform.turn_rate_index();
    if (idx >= kin.dim()) {
        throw DomainError("taylor_expectations: kinematic state has no turn-rate entry");
    }
    const double dt = transform.dt();
    const Eigen::Matrix2d r = rotation_matrix(dt * kin.mean(idx));
    Eigen::Matrix2d j;
    j << 0.0, -1.0, 1.0, 0.0;
    // d^2/dw^2 [R A R^T] = 2 dt^2 R (J A J^T - A) R^T.
    const double scale = kappa * kin.cov(idx, idx) * 2.0 * dt * dt;
    const Eigen::Matrix2d a = v_bar.matrix();
    const Eigen::Matrix2d a_inv = v_bar.inverse();
    const Eigen::Matrix2d c2 = r * (a + scale * (j * a * j.transpose() - a)) * r.transpose();
    const Eigen::Matrix2d c1 = r * (a_inv + scale * (j * a_inv * j.transpose() - a_inv)) * r.transpose();
    return {SpdMatrix(c1), SpdMatrix(c2), v_bar.logdet()};
}

TaylorExpectations finite_difference_expectations(const ExtentTransform& transform, const SpdMatrix& v_bar,
                                                  const kinematics::GaussianState& kin, double kappa) {
    const Eigen::VectorXd& m = kin.mean;
    const Eigen::Index n = m.size();
    const ConjugatedTerms centre = conjugate(transform, v_bar, m);
    Eigen::MatrixXd c1 = centre.inverse;
    Eigen::MatrixXd c2 = centre.value;
    double c3 = centre.logdet;

    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i) = 1e-4 * std::max(1.0, std::abs(m(i)));
    }
    auto shifted = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
        Eigen::VectorXd x = m;
        x(i) += si * h(i);
        x(j) += sj * h(j);
        return conjugate(transform, v_bar, x);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double pij = kin.cov(i, j);
            if (pij == 0.0) {
                continue;
            }
            ConjugatedTerms second;
            if (i == j) {
                Eigen::VectorXd xp = m;
                Eigen::VectorXd xm = m;
                xp(i) += h(i);
                xm(i) -= h(i);
                const ConjugatedTerms fp = conjugate(transform, v_bar, xp);
                const ConjugatedTerms fm = conjugate(transform, v_bar, xm);
                const double h2 = h(i) * h(i);
                second = {(fp.value - 2.0 * centre.value + fm.value) / h2,
                          (fp.inverse - 2.0 * centre.inverse + fm.inverse) / h2,
                          (fp.logdet - 2.0 * centre.logdet + fm.logdet) / h2};
            } else {
                const ConjugatedTerms pp = shifted(i, 1, j, 1);
                const ConjugatedTerms pm = shifted(i, 1, j, -1);
                const ConjugatedTerms mp = shifted(i, -1, j, 1);
                const ConjugatedTerms mm = shifted(i, -1, j, -1);
                const double hh = 4.0 * h(i) * h(j);
                second = {(pp.value - pm.value - mp.value + mm.value) / hh,
                          (pp.inverse - pm.inverse - mp.inverse + mm.inverse) / hh,
                          (pp.logdet - pm.logdet - mp.logdet + mm.logdet) / hh};
            }
            const double w = kappa * pij * (i == j ? 1.0 : 2.0);
            c1 += w * second.inverse;
            c2 += w * second.value;
            c3 += w * second.logdet;
        }
    }
    return {SpdMatrix(c1), SpdMatrix(c2), c3};
}

double resolve_dof(const DofRule& rule, double nu, const Eigen::MatrixXd& q, const SpdMatrix& v_mat,
                   const SpdMatrix& c2) {
    return std::visit(Overloaded{[](const FixedDof& f) { return f.v; },
                                 [&](const VolumeCoupledDof&) { return v_setting_volume_coupled(nu, q, v_mat); },
                                 [&](const VolumePreservingDof&) {
                                     return v_setting_volume_preserving(nu, v_mat, c2);
                                 }},
                      rule);
}

}  // namespace

Eigen::MatrixXd ExtentState::expected() const {
    return matvar::iw_mean(params());
}

Eigen::Matrix2d rotation_matrix(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
}

Eigen::MatrixXd rotation_m(const Eigen::VectorXd& x, double dt) {
    if (x.size() < 5) {
        throw DomainError("rotation_m: state must carry the turn rate as its fifth entry");
    }
    return rotation_matrix(dt * x(4));
}

ExtentTransform ExtentTransform::rotation(double dt, Eigen::Index turn_rate_index) {
    ExtentTransform t;
    t.kind_ = Kind::kRotation;
    t.dt_ = dt;
    t.turn_rate_index_ = turn_rate_index;
    return t;
}

ExtentTransform ExtentTransform::constant(const Eigen::MatrixXd& m) {
    ExtentTransform t;
    t.kind_ = Kind::kConstant;
    t.constant_ = m;
    return t;
}

ExtentTransform ExtentTransform::general(Fn fn) {
    ExtentTransform t;
    t.kind_ = Kind::kGeneral;
    t.fn_ = std::move(fn);
    return t;
}

Eigen::MatrixXd ExtentTransform::operator()(const Eigen::VectorXd& x) const {
    switch (kind_) {
        case Kind::kRotation:
            if (turn_rate_index_ >= x.size()) {
                throw DomainError("ExtentTransform: state has no turn-rate entry");
            }
            return rotation_matrix(dt_ * x(turn_rate_index_));
        case Kind::kConstant:
            return constant_;
        case Kind::kGeneral:
            return fn_(x);
    }
    return constant_;
}

SpdMatrix intermediate_v(const SpdMatrix& v_mat, const Eigen::MatrixXd& q) {
    require_square(q, v_mat.dim(), "intermediate_v");
    if (!is_positive_semidefinite(q)) {
        throw NotSpdError("intermediate_v: noise matrix must be positive semidefinite", 0);
    }
    if (q.isZero(0.0)) {
        return v_mat;
    }
    const SpdMatrix precision(v_mat.inverse() + q);
    return SpdMatrix(precision.inverse());
}

TaylorExpectations taylor_expectations(const ExtentTransform& transform, const SpdMatrix& v_bar,
                                       const kinematics::GaussianState& kin, TaylorWeight weight) {
    const double kappa = taylor_weight_value(weight);
    switch (transform.kind()) {
        case ExtentTransform::Kind::kRotation:
            return rotation_expectations(transform, v_bar, kin, kappa);
        case ExtentTransform::Kind::kConstant: {
            const ConjugatedTerms c = conjugate(transform, v_bar, kin.mean);
            return {SpdMatrix(c.inverse), SpdMatrix(c.value), c.logdet};
        }
        case ExtentTransform::Kind::kGeneral:
            return finite_difference_expectations(transform, v_bar, kin, kappa);
    }
    throw DomainError("taylor_expectations: unknown transform kind");
}

double projection_objective(double nu, const Eigen::MatrixXd& v_mat, const matvar::LogDetMoments& moments) {
    const int d = static_cast<int>(v_mat.rows());
    const SpdMatrix v(v_mat);
    return 0.5 * (nu - d - 1.0) * (v.logdet() - d * std::numbers::ln2) - 0.5 * nu * moments.e_lndet -
           0.5 * (v.matrix() * moments.e_inv).trace() - ln_multigamma(d, 0.5 * (nu - d - 1.0));
}

ExtentState kld_project_to_iw(const matvar::LogDetMoments& moments, const ProjectionOptions& options) {
    const SpdMatrix e_inv(moments.e_inv);
    const int d = static_cast<int>(e_inv.dim());
    const double target = e_inv.logdet() + d * std::numbers::ln2 + moments.e_lndet;
    const double nu = solve_dof(target, d, options);
    return {nu, SpdMatrix((nu - d - 1.0) * e_inv.inverse())};
}

double nu_optimal(double v, const SpdMatrix& c1, double c3, int d) {
    if (!(v > 2.0 * d)) {
        throw DomainError(fmt::format("nu_optimal: v must exceed 2d = {}, got {}", 2 * d, v));
    }
    const matvar::LogDetMoments moments{(v - d - 1.0) * c1.matrix(),
                                        c3 - d * std::numbers::ln2 - iw_digamma_sum(v, d)};
    ProjectionOptions options;
    options.upper_bracket = std::max(1e6, 10.0 * v);
    return kld_project_to_iw(moments, options).nu;
}

double nu_closed_form(double v, const SpdMatrix& c1, const SpdMatrix& c2, int d) {
    const double rho = v - 2.0 * d - 2.0;
    if (!(rho > 0.0)) {
        throw DomainError(fmt::format("nu_closed_form: v must exceed 2d + 2 = {}, got {}", 2 * d + 2, v));
    }
    const double det_root = std::exp((c1.logdet() + c2.logdet()) / d);
    const double denom = (rho + d + 1.0) * det_root - rho;
    if (!(denom > 0.0)) {
        throw DomainError(fmt::format("nu_closed_form: |C1 C2|^(1/d) = {} too small (denominator {})", det_root,
                                      denom));
    }
    return 2.0 * d + 2.0 + (d + 1.0) * rho / denom;
}

void require_predictable(const ExtentState& extent, const char* who) {
    const int d = extent.dim();
    if (!(extent.nu > 2.0 * d + 2.0 + kDofFloorMargin) || !std::isfinite(extent.nu)) {
        throw DomainError(fmt::format("{}: extent dof {} must exceed 2d + 2 = {}", who, extent.nu, 2 * d + 2));
    }
}

ExtentState predict_feldmann(const ExtentState& extent, double dt, double tau) {
    require_predictable(extent, "predict_feldmann");
    if (!(tau > 0.0)) {
        throw DomainError(fmt::format("predict_feldmann: tau must be > 0, got {}", tau));
    }
    const int d = extent.dim();
    const double nu = 2.0 * d + 4.0 + std::exp(-dt / tau) * (extent.nu - 2.0 * d - 4.0);
    const double factor = (nu - 2.0 * d - 2.0) / (extent.nu - 2.0 * d - 2.0);
    return {nu, SpdMatrix(factor * extent.v_mat.matrix())};
}

ExtentState predict_bartlett(const ExtentState& extent, const Eigen::MatrixXd& m, const Eigen::MatrixXd& q,
                             double v) {
    require_predictable(extent, "predict_bartlett");
    const int d = extent.dim();
    require_square(m, d, "predict_bartlett");
    require_nonsingular(m, "predict_bartlett");
    if (!(v > 2.0 * d)) {
        throw DomainError(fmt::format("predict_bartlett: v must exceed 2d = {}, got {}", 2 * d, v));
    }
    const SpdMatrix v_bar = intermediate_v(extent.v_mat, q);
    return {v, SpdMatrix(m * v_bar.matrix() * m.transpose())};
}

Eigen::MatrixXd resolve_noise(const NoiseRule& rule, const SpdMatrix& v_mat) {
    const Eigen::Index d = v_mat.dim();
    return std::visit(
        Overloaded{[&](const FixedNoise& f) {
                       return f.q.size() == 0 ? Eigen::MatrixXd(Eigen::MatrixXd::Zero(d, d)) : f.q;
                   },
                   [&](const InverseScaledNoise& s) { return Eigen::MatrixXd(s.scale * v_mat.inverse()); },
                   [&](const DeterminantScaledNoise& s) {
                       const double level = s.scale * std::exp(-v_mat.logdet() / static_cast<double>(d));
                       return Eigen::MatrixXd(level * Eigen::MatrixXd::Identity(d, d));
                   }},
        rule);
}

double v_setting_volume_coupled(double nu, const Eigen::MatrixXd& q, const SpdMatrix& v_mat) {
    const int d = static_cast<int>(v_mat.dim());
    require_square(q, d, "v_setting_volume_coupled");
    // |I + QV| = |V^{-1} + Q| |V|.
    const double log_growth = SpdMatrix(v_mat.inverse() + q).logdet() + v_mat.logdet();
    return 2.0 * d + 2.0 + (nu - 2.0 * d - 2.0) * std::exp(-log_growth / d);
}

double v_setting_volume_preserving(double nu, const SpdMatrix& v_mat, const SpdMatrix& c2) {
    const int d = static_cast<int>(v_mat.dim());
    // |C2^{-1} V| = |V| / |C2|.
    const double log_ratio = v_mat.logdet() - c2.logdet();
    return 2.0 * d + 2.0 + (nu - 2.0 * d - 2.0) * std::exp(-log_ratio / d);
}

ProposedPrediction predict_proposed_detailed(const ExtentState& extent, const kinematics::GaussianState& kin,
                                             const TransitionConfig& cfg, const PredictionOptions& options) {
    require_predictable(extent, "predict_proposed");
    const int d = extent.dim();
    const Eigen::MatrixXd q = resolve_noise(cfg.q, extent.v_mat);
    SpdMatrix v_bar = intermediate_v(extent.v_mat, q);
    TaylorExpectations c = taylor_expectations(cfg.transform, v_bar, kin, options.taylor_weight);
    const double v = resolve_dof(cfg.v_rule, extent.nu, q, extent.v_mat, c.c2);
    const double nu = options.nu_mode == NuMode::kClosedForm ? nu_closed_form(v, c.c1, c.c2, d)
                                                             : nu_optimal(v, c.c1, c.c3, d);
    const double scale = (nu - d - 1.0) / (v - d - 1.0);
    ExtentState next{nu, SpdMatrix(scale * c.c1.inverse())};
    return {std::move(next), v, std::move(v_bar), std::move(c)};
}

ExtentState predict_proposed(const ExtentState& extent, const kinematics::GaussianState& kin,
                             const TransitionConfig& cfg, const PredictionOptions& options) {
    return predict_proposed_detailed(extent, kin, cfg, options).state;
}

matvar::LogDetMoments granstrom_moments(const ExtentState& extent, const kinematics::GaussianState& kin,
                                        const ExtentTransform& transform, double n, TaylorWeight weight) {
    require_predictable(extent, "predict_granstrom");
    const int d = extent.dim();
    if (!(n > d + 1.0)) {
        throw DomainError(fmt::format("predict_granstrom: n must exceed d + 1 = {}, got {}", d + 1, n));
    }
    const TaylorExpectations c = taylor_expectations(transform, extent.v_mat, kin, weight);
    double wishart_digamma = 0.0;
    for (int i = 1; i <= d; ++i) {
        wishart_digamma += digamma(0.5 * (n - i + 1.0));
    }
    const Eigen::MatrixXd e_inv = (n * (extent.nu - d - 1.0) / (n - d - 1.0)) * c.c1.matrix();
    const double e_lndet = c.c3 - d * std::log(n) + wishart_digamma - iw_digamma_sum(extent.nu, d);
    return {e_inv, e_lndet};
}

ExtentState predict_granstrom(const ExtentState& extent, const kinematics::GaussianState& kin,
                              const ExtentTransform& transform, double n, TaylorWeight weight) {
    return kld_project_to_iw(granstrom_moments(extent, kin, transform, n, weight));
}

}  // namespace etrack::extent
