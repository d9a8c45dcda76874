#pragma once

#include <cmath>
#include <vector>

#include "fracheat/errors.hpp"
#include "fracheat/gammafn.hpp"

namespace fracheat {

namespace bessel_detail {

inline constexpr double kPi = 3.14159265358979323846;

/// Ascending series in long double. Free of harmful cancellation for x up to
/// ~16; the extra mantissa bits absorb the alternation loss there.
inline double series(double nu, double x) {
    const long double half_x = 0.5L * static_cast<long double>(x);
    const long double q = -half_x * half_x;
    long double term = ::expl(static_cast<long double>(nu) * ::logl(half_x) -
                                 ::lgammal(static_cast<long double>(nu) + 1.0L));
    long double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<long double>(k) * (static_cast<long double>(nu) + k));
        sum += term;
        if (::fabsl(term) < 1e-21L * ::fabsl(sum) && k > 4) break;
    }
    return static_cast<double>(sum);
}

/// Large-argument (Hankel) asymptotic expansion. Reliable for x >= ~14 when
/// the order is modest; *ok reports whether the tail dropped below 1e-13.
inline double hankel_asymptotic(double nu, double x, bool* ok = nullptr) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    double prev_mag = 1.0;
    bool converged = false;
    for (int m = 1; m <= 40; ++m) {
        const double odd = 2.0 * m - 1.0;
        term *= (mu - odd * odd) / (m * 8.0 * x);
        const double mag = std::abs(term);
        if (mag < 1e-17) { converged = true; break; }
        if (mag > prev_mag) { converged = prev_mag < 1e-13; break; }
        prev_mag = mag;
        const int cycle = m % 4; // signs follow i^m split into real/imag parts
        if (cycle == 1) q += term;
        else if (cycle == 2) p -= term;
        else if (cycle == 3) q -= term;
        else p += term;
    }
    if (ok) *ok = converged || prev_mag < 1e-13;
    const double chi = x - (0.5 * nu + 0.25) * kPi;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

/// Upward three-term recurrence from the closed half-integer seeds.
/// Stable when the target order does not exceed x.
inline double half_integer_upward(double nu, double x) {
    const double amp = std::sqrt(2.0 / (kPi * x));
    double jm = amp * std::cos(x); // J_{-1/2}
    double j = amp * std::sin(x);  // J_{+1/2}
    for (double order = 0.5; order < nu - 0.25; order += 1.0) {
        const double jp = (2.0 * order / x) * j - jm;
        jm = j;
        j = jp;
    }
    return j;
}

/// Miller downward recurrence over orders {frac(nu), frac(nu)+1, ...},
/// normalized against the fractional base order evaluated independently.
inline double miller_downward(double nu, double x) {
    const double delta = nu - std::floor(nu);
    const int target = static_cast<int>(std::floor(nu));
    const int start = target + 16 + static_cast<int>(std::sqrt(60.0 * (target + 2)));
    double p_up = 0.0, p = 1e-280;
    double at_target = 0.0, at_base0 = 0.0, at_base1 = 0.0;
    for (int j = start; j >= 0; --j) {
        const double order = delta + j + 1.0;
        double p_dn = (2.0 * order / x) * p - p_up;
        p_up = p;
        p = p_dn;
        if (std::abs(p) > 1e280) { // rescale to avoid overflow
            p *= 1e-280; p_up *= 1e-280;
            at_target *= 1e-280; at_base0 *= 1e-280; at_base1 *= 1e-280;
        }
        if (j == target) at_target = p;
        if (j == 1) at_base1 = p;
        if (j == 0) at_base0 = p;
    }
    double ref0, ref1;
    if (x >= 14.0) {
        ref0 = hankel_asymptotic(delta, x);
        ref1 = hankel_asymptotic(delta + 1.0, x);
    } else {
        ref0 = series(delta, x);
        ref1 = series(delta + 1.0, x);
    }
    // normalize at whichever base order is farther from a zero
    const double scale = (std::abs(ref0) >= std::abs(ref1)) ? ref0 / at_base0 : ref1 / at_base1;
    return at_target * scale;
}

inline bool is_half_integer(double nu) {
    const double two_nu = 2.0 * nu;
    return std::abs(two_nu - std::round(two_nu)) < 1e-12 &&
           std::abs(nu - std::round(nu)) > 0.25;
}

} // namespace bessel_detail

/// Bessel function of the first kind J_nu(x) for real order nu >= 0, x >= 0.
/// Half-integer orders use the closed trigonometric forms away from the
/// origin; elsewhere a series / asymptotic / Miller-recurrence split keeps
/// the relative error near 1e-11 (absolute near zeros of J).
inline double bessel_j(double nu, double x) {
    namespace bd = bessel_detail;
    if (!(nu >= 0.0)) throw DomainError("bessel_j: requires nu >= 0");
    if (!(x >= 0.0)) throw DomainError("bessel_j: requires x >= 0");
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    if (x > 1e15) throw DomainError("bessel_j: argument beyond overflow-safe range");

    if (bd::is_half_integer(nu) && x >= 2.0 && x >= nu) return bd::half_integer_upward(nu, x);
    if (x < 14.0) {
        if (x >= nu) return bd::series(nu, x);
        return nu < 30.0 ? bd::series(nu, x) : bd::miller_downward(nu, x);
    }
    if (nu < 2.0) {
        bool ok = false;
        const double v = bd::hankel_asymptotic(nu, x, &ok);
        if (ok) return v;
        return bd::series(nu, x);
    }
    if (nu <= x) {
        // upward from the fractional base order, stable since orders stay <= x
        const double delta = nu - std::floor(nu);
        double jm = bd::hankel_asymptotic(delta, x);
        double j = bd::hankel_asymptotic(delta + 1.0, x);
        for (double order = delta + 1.0; order < nu - 0.25; order += 1.0) {
            const double jp = (2.0 * order / x) * j - jm;
            jm = j;
            j = jp;
        }
        return j;
    }
    return bd::miller_downward(nu, x);
}

/// d/dx J_nu(x) via J'_nu = (nu/x) J_nu - J_{nu+1}.
inline double bessel_j_derivative(double nu, double x) {
    if (x == 0.0) return nu == 1.0 ? 0.5 : 0.0;
    return (nu / x) * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

/// k-th positive zero of J_nu (k >= 1): McMahon expansion plus Newton polish.
inline double bessel_j_zero(double nu, int k) {
    namespace bd = bessel_detail;
    if (k < 1) throw DomainError("bessel_j_zero: requires k >= 1");
    const double mu = 4.0 * nu * nu;
    const double b = (k + 0.5 * nu - 0.25) * bd::kPi;
    const double e = 8.0 * b;
    double x = b - (mu - 1.0) / e -
               4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
    if (x < nu + 0.5) x = nu + 0.5 + k; // crude safeguard for low k, larger nu
    for (int it = 0; it < 8; ++it) {
        const double f = bessel_j(nu, x);
        const double fp = bessel_j_derivative(nu, x);
        if (fp == 0.0) break;
        double dx = -f / fp;
        const double cap = 0.45 * bd::kPi;
        if (dx > cap) dx = cap;
        if (dx < -cap) dx = -cap;
        x += dx;
        if (std::abs(dx) < 1e-13 * x) break;
    }
    return x;
}

} // namespace fracheat
