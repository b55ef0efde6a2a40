#pragma once

#include "etrack/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace etrack::testing {

/// Random SPD matrix with eigenvalues drawn uniformly from [lo, hi] and a random orthogonal basis.
inline Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index d, double lo, double hi) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(lo, hi);
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        g(i) = normal(rng);
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd ev(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        ev(i) = uniform(rng);
    }
    const Eigen::MatrixXd a = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
}

/// Largest entry-wise |a - b| divided by the largest |b|.
inline double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

/// Two-sided one-sample Kolmogorov-Smirnov test; returns the asymptotic p-value
/// with the Stephens small-sample correction.
inline double ks_p_value(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        stat = std::max({stat, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * stat;
    if (lambda < 0.2) {
        return 1.0;
    }
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace etrack::testing
