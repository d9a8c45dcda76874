#pragma once

#include <cmath>
#include <limits>

#include "fracheat/errors.hpp"

namespace fracheat {

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: requires x > 0");
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

/// true when x sits on a pole of Gamma (a nonpositive integer, up to rounding).
inline bool is_gamma_pole(double x) {
    if (x > 0.0) return false;
    double r = std::round(x);
    return std::abs(x - r) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
}

/// ln|Gamma(x)| with the sign of Gamma(x), valid away from poles.
struct LogGammaSigned {
    double log_abs;
    int sign; // +1 or -1
};

inline LogGammaSigned log_gamma_signed(double x) {
    if (is_gamma_pole(x)) throw DomainError("log_gamma_signed: pole at x = " + std::to_string(x));
    int sign = 0;
    double lg = ::lgamma_r(x, &sign);
    return {lg, sign};
}

/// 1/Gamma(x) for any real x; zero at the poles of Gamma.
inline double reciprocal_gamma(double x) {
    if (is_gamma_pole(x)) return 0.0;
    auto g = log_gamma_signed(x);
    if (g.log_abs > 700.0) return 0.0; // Gamma overflows, reciprocal underflows
    return g.sign * std::exp(-g.log_abs);
}

} // namespace fracheat
