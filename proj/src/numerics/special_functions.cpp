#include "etrack/special_functions.hpp"

#include "etrack/spd_matrix.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace etrack {

namespace {

// Below this argument the recurrence shifts x upward before the asymptotic
// series is applied; at 10 the truncated series is accurate to ~1e-16.
constexpr double kAsymptoticThreshold = 10.0;

void require_positive(double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError(fmt::format("{}: argument must be finite and > 0, got {}", name, x));
    }
}

double digamma_asymptotic(double y) {
    const double r = 1.0 / (y * y);
    // -B_{2k} / (2k y^{2k}) for k = 1..7, Horner in r.
    const double series =
        r * (1.0 / 12 -
             r * (1.0 / 120 -
                  r * (1.0 / 252 -
                       r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r * (1.0 / 12)))))));
    return std::log(y) - 0.5 / y - series;
}

double trigamma_asymptotic(double y) {
    const double r = 1.0 / (y * y);
    // B_{2k} / y^{2k+1} for k = 1..7.
    const double series =
        r * (1.0 / 6 -
             r * (1.0 / 30 -
                  r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * (7.0 / 6)))))));
    return 1.0 / y + 0.5 * r + series / y;
}

int shift_count(double x) {
    return x >= kAsymptoticThreshold ? 0 : static_cast<int>(std::ceil(kAsymptoticThreshold - x));
}

}  // namespace

double digamma(double x) {
    require_positive(x, "digamma");
    const int n = shift_count(x);
    // psi(x) = psi(x + n) - sum_{k<n} 1/(x + k); smallest terms first.
    double correction = 0.0;
    for (int k = n - 1; k >= 0; --k) {
        correction += 1.0 / (x + k);
    }
    return digamma_asymptotic(x + n) - correction;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    const int n = shift_count(x);
    double correction = 0.0;
    for (int k = n - 1; k >= 0; --k) {
        const double t = x + k;
        correction += 1.0 / (t * t);
    }
    return trigamma_asymptotic(x + n) + correction;
}

double ln_multigamma(int d, double a) {
    if (d < 1) {
        throw DomainError(fmt::format("ln_multigamma: dimension must be >= 1, got {}", d));
    }
    if (!(a > 0.5 * (d - 1)) || !std::isfinite(a)) {
        throw DomainError(
            fmt::format("ln_multigamma: argument must exceed (d - 1)/2 = {}, got {}", 0.5 * (d - 1), a));
    }
    double result = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
    for (int i = 1; i <= d; ++i) {
        result += std::lgamma(a + 0.5 * (1 - i));
    }
    return result;
}

double iw_digamma_sum(double nu, int d) {
    double s = 0.0;
    for (int i = 1; i <= d; ++i) {
        s += digamma(0.5 * (nu - d - i));
    }
    return s;
}

double iw_trigamma_sum(double nu, int d) {
    double s = 0.0;
    for (int i = 1; i <= d; ++i) {
        s += trigamma(0.5 * (nu - d - i));
    }
    return s;
}

}  // namespace etrack
