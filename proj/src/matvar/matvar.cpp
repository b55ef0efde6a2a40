#include "etrack/matvar.hpp"

#include "etrack/special_functions.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace etrack::matvar {

namespace {

constexpr double kIntegerTolerance = 1e-9;

bool is_integer(double x) {
    return std::abs(x - std::round(x)) < kIntegerTolerance;
}

Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            g(r, c) = normal(rng);
        }
    }
    return g;
}

// Lower-triangular Bartlett factor A with A A^T ~ W_d(w, I).
Eigen::MatrixXd bartlett_factor(Rng& rng, Eigen::Index d, double w) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        std::gamma_distribution<double> chi2(0.5 * (w - static_cast<double>(i)), 2.0);
        a(i, i) = std::sqrt(chi2(rng));
        for (Eigen::Index j = 0; j < i; ++j) {
            a(i, j) = normal(rng);
        }
    }
    return a;
}

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& m, const char* who) {
    if (m.rows() != m.cols()) {
        throw DomainError(fmt::format("{}: transformation must be square", who));
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (!(s.minCoeff() > 1e-12 * s.maxCoeff())) {
        throw DomainError(fmt::format("{}: transformation matrix is singular", who));
    }
    return m.inverse();
}

void check_noise(const Eigen::MatrixXd& q, Eigen::Index d, const char* who) {
    if (q.rows() != d || q.cols() != d) {
        throw DomainError(fmt::format("{}: noise matrix must be {}x{}", who, d, d));
    }
    if (!is_positive_semidefinite(q)) {
        throw NotSpdError(fmt::format("{}: noise matrix must be positive semidefinite", who), 0);
    }
}

// Shared tail of both transition samplers: given the width-n factor of X_k^{-1},
// form Y_{k+1} = M^{-T}(Y_k H_1^T + n^{1/2} U) and return X_{k+1}.
SpdMatrix finish_transition(Rng& rng, const Eigen::MatrixXd& factor, const Eigen::MatrixXd& m_inv,
                            const Eigen::MatrixXd& q, double n) {
    const Eigen::Index d = factor.rows();
    const Eigen::MatrixXd q_root = psd_sqrt(q);
    Eigen::MatrixXd x_inv_next;
    if (is_integer(n)) {
        const Eigen::Index cols = static_cast<Eigen::Index>(std::llround(n));
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(d, cols);
        y.leftCols(factor.cols()) = factor;
        // n^{1/2} U has columns distributed N(0, Q).
        const Eigen::MatrixXd scaled_u = q_root * standard_normal(rng, d, cols);
        const Eigen::MatrixXd y_next = m_inv.transpose() * (y + scaled_u);
        x_inv_next = y_next * y_next.transpose();
    } else {
        const double remainder = n - static_cast<double>(d);
        if (!(remainder > static_cast<double>(d) - 1.0)) {
            throw DomainError(fmt::format(
                "transition_sample: non-integer n = {} needs n - d > d - 1 (got {})", n, remainder));
        }
        const Eigen::MatrixXd centred = factor + q_root * standard_normal(rng, d, d);
        const Eigen::MatrixXd inner =
            centred * centred.transpose() + wishart_sample_psd(rng, remainder, q);
        x_inv_next = m_inv.transpose() * inner * m_inv;
    }
    const SpdMatrix precision(x_inv_next);
    return SpdMatrix(precision.inverse());
}

}  // namespace

void InverseWishartParams::validate() const {
    const int d = dim();
    if (!(nu > 2.0 * d) || !std::isfinite(nu)) {
        throw DomainError(fmt::format("inverse Wishart requires nu > 2d = {}, got {}", 2 * d, nu));
    }
}

void NcIwParams::validate() const {
    const int d = dim();
    if (!(v > 2.0 * d)) {
        throw DomainError(fmt::format("NcIwParams: v must exceed 2d = {}, got {}", 2 * d, v));
    }
    if (theta.rows() != d || theta.cols() != d) {
        throw DomainError(fmt::format("NcIwParams: theta must be {}x{}, got {}x{}", d, d, theta.rows(), theta.cols()));
    }
    if (!is_positive_semidefinite(theta)) {
        throw NotSpdError("NcIwParams: theta must be symmetric positive semidefinite", 0);
    }
}

void WishartParams::validate() const {
    const int d = dim();
    if (!(w > d - 1.0) || !std::isfinite(w)) {
        throw DomainError(fmt::format("Wishart requires w > d - 1 = {}, got {}", d - 1, w));
    }
}

double iw_logpdf(const SpdMatrix& x, const InverseWishartParams& p) {
    p.validate();
    const int d = p.dim();
    if (x.dim() != d) {
        throw DomainError("iw_logpdf: dimension mismatch");
    }
    const double a = 0.5 * (p.nu - d - 1);
    const double trace_term = (p.v_mat.matrix() * x.inverse()).trace();
    return -0.5 * trace_term + a * p.v_mat.logdet() - a * d * std::numbers::ln2 -
           ln_multigamma(d, a) - 0.5 * p.nu * x.logdet();
}

double wishart_logpdf(const SpdMatrix& x, const WishartParams& p) {
    p.validate();
    const int d = p.dim();
    if (x.dim() != d) {
        throw DomainError("wishart_logpdf: dimension mismatch");
    }
    const double trace_term = p.w_mat.solve(x.matrix()).trace();
    return -0.5 * trace_term + 0.5 * (p.w - d - 1) * x.logdet() - 0.5 * p.w * d * std::numbers::ln2 -
           ln_multigamma(d, 0.5 * p.w) - 0.5 * p.w * p.w_mat.logdet();
}

LogDetMoments iw_entropy_moments(const InverseWishartParams& p) {
    p.validate();
    const int d = p.dim();
    return {(p.nu - d - 1) * p.v_mat.inverse(),
            p.v_mat.logdet() - d * std::numbers::ln2 - iw_digamma_sum(p.nu, d)};
}

Eigen::MatrixXd iw_mean(const InverseWishartParams& p) {
    const int d = p.dim();
    if (!(p.nu > 2.0 * d + 2.0)) {
        throw DomainError(fmt::format("inverse Wishart mean requires nu > 2d + 2, got {}", p.nu));
    }
    return p.v_mat.matrix() / (p.nu - 2.0 * d - 2.0);
}

Eigen::MatrixXd iw_elementwise_variance(const InverseWishartParams& p) {
    const int d = p.dim();
    const double k = p.nu - 2.0 * d;
    if (!(k > 4.0)) {
        throw DomainError(fmt::format("inverse Wishart variance requires nu > 2d + 4, got {}", p.nu));
    }
    const Eigen::MatrixXd& v = p.v_mat.matrix();
    const double denom = (k - 1.0) * (k - 2.0) * (k - 2.0) * (k - 4.0);
    Eigen::MatrixXd var(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            var(i, j) = (k * v(i, j) * v(i, j) + (k - 2.0) * v(i, i) * v(j, j)) / denom;
        }
    }
    return var;
}

SpdMatrix wishart_sample(Rng& rng, const WishartParams& p) {
    p.validate();
    const Eigen::MatrixXd la = p.w_mat.lower() * bartlett_factor(rng, p.w_mat.dim(), p.w);
    return SpdMatrix(la * la.transpose());
}

Eigen::MatrixXd wishart_sample_psd(Rng& rng, double w, const Eigen::MatrixXd& scale) {
    const Eigen::Index d = scale.rows();
    if (!(w > static_cast<double>(d) - 1.0)) {
        throw DomainError(fmt::format("Wishart requires w > d - 1 = {}, got {}", d - 1, w));
    }
    const Eigen::MatrixXd la = psd_sqrt(scale) * bartlett_factor(rng, d, w);
    return symmetrize(la * la.transpose());
}

SpdMatrix iw_sample(Rng& rng, const InverseWishartParams& p) {
    p.validate();
    const int d = p.dim();
    const SpdMatrix precision_scale(p.v_mat.inverse());
    const SpdMatrix s = wishart_sample(rng, {p.nu - d - 1, precision_scale});
    return SpdMatrix(s.inverse());
}

Eigen::MatrixXd process_noise_sample(Rng& rng, const Eigen::MatrixXd& q, double v) {
    const Eigen::Index d = q.rows();
    check_noise(q, d, "process_noise_sample");
    const double n = v - static_cast<double>(d) - 1.0;
    return wishart_sample_psd(rng, n, q / n);
}

SpdMatrix transition_sample(Rng& rng, const SpdMatrix& x_prev, const Eigen::MatrixXd& m,
                            const Eigen::MatrixXd& q, double v) {
    const Eigen::Index d = x_prev.dim();
    check_noise(q, d, "transition_sample");
    const double n = v - static_cast<double>(d) - 1.0;
    if (!(n >= static_cast<double>(d) - kIntegerTolerance)) {
        throw DomainError(fmt::format("transition_sample: needs v >= 2d + 1 = {}, got {}", 2 * d + 1, v));
    }
    const Eigen::MatrixXd m_inv = checked_inverse(m, "transition_sample");
    const Eigen::MatrixXd factor = cholesky_lower(x_prev.inverse());
    return finish_transition(rng, factor, m_inv, q, n);
}

SpdMatrix transition_sample_projected(Rng& rng, const SpdMatrix& x_prev, double prior_nu,
                                      const Eigen::MatrixXd& m, const Eigen::MatrixXd& q, double v) {
    const Eigen::Index d = x_prev.dim();
    check_noise(q, d, "transition_sample_projected");
    const double n_prior = prior_nu - static_cast<double>(d) - 1.0;
    const double n = v - static_cast<double>(d) - 1.0;
    if (!is_integer(n_prior) || !is_integer(n)) {
        throw DomainError("transition_sample_projected: factor widths must be integers");
    }
    const Eigen::Index cols_prior = std::llround(n_prior);
    const Eigen::Index cols = std::llround(n);
    if (cols < d || cols > cols_prior) {
        throw DomainError(fmt::format("transition_sample_projected: need d <= n <= n_k, got n = {}, n_k = {}",
                                      cols, cols_prior));
    }
    const Eigen::MatrixXd m_inv = checked_inverse(m, "transition_sample_projected");
    const Eigen::MatrixXd g = standard_normal(rng, d, cols_prior);
    // Polar factor (G G^T)^{-1/2} G is Haar distributed on the row-orthonormal d x n_k matrices.
    const Eigen::MatrixXd orthonormal = sym_inv_sqrt(SpdMatrix(g * g.transpose())).matrix() * g;
    const Eigen::MatrixXd y = cholesky_lower(x_prev.inverse()) * orthonormal;
    return finish_transition(rng, y.leftCols(cols), m_inv, q, n);
}

}  // namespace etrack::matvar
