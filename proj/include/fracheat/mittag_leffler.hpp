#pragma once

#include <mpfr.h>

#include <cmath>
#include <complex>
#include <deque>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include "fracheat/errors.hpp"
#include "fracheat/gammafn.hpp"

namespace fracheat {

/// Accuracy knobs for Mittag-Leffler evaluation on the negative real axis.
struct MlfAccuracy {
    double rel_tol = 1e-10;        ///< target relative error
    int series_terms_max = 40000;  ///< hard cap on power-series terms
    double regime_switch_lo = 5.0; ///< series regime for |x| <= this
    double regime_switch_hi = 50.0;///< asymptotic regime for |x| >= this

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1e-6))
            throw ConfigError("MlfAccuracy: rel_tol must lie in (0, 1e-6)");
        if (!(series_terms_max > 10))
            throw ConfigError("MlfAccuracy: series_terms_max too small");
        if (!(regime_switch_lo > 0.0 && regime_switch_lo < regime_switch_hi))
            throw ConfigError("MlfAccuracy: requires 0 < regime_switch_lo < regime_switch_hi");
    }
};

namespace mlf_detail {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

/// Shared table of Gamma(a k + b) values in extended precision. The series
/// regime cancels catastrophically (the partial sums overshoot the result by
/// up to hundreds of digits for small a), so terms must be formed in MPFR.
/// Values are deterministic; caching them does not change results.
class GammaTable {
public:
    GammaTable(double a, double b, mpfr_prec_t prec) : a_(a), b_(b), prec_(prec) {}
    GammaTable(const GammaTable&) = delete;

    mpfr_prec_t precision() const { return prec_; }

    /// Gamma(a k + b), extending the table on demand.
    mpfr_srcptr at(int k) {
        {
            std::shared_lock lock(mutex_);
            if (k < static_cast<int>(values_.size())) return values_[k].v;
        }
        std::unique_lock lock(mutex_);
        mpfr_t arg;
        mpfr_init2(arg, prec_);
        while (k >= static_cast<int>(values_.size())) {
            const int j = static_cast<int>(values_.size());
            values_.emplace_back(prec_);
            mpfr_set_d(arg, a_, MPFR_RNDN);
            mpfr_mul_si(arg, arg, j, MPFR_RNDN);
            mpfr_add_d(arg, arg, b_, MPFR_RNDN);
            mpfr_gamma(values_.back().v, arg, MPFR_RNDN);
        }
        mpfr_clear(arg);
        return values_[k].v;
    }

private:
    struct Cell {
        mpfr_t v;
        explicit Cell(mpfr_prec_t prec) { mpfr_init2(v, prec); }
        Cell(const Cell&) = delete;
        Cell& operator=(const Cell&) = delete;
        ~Cell() { mpfr_clear(v); }
    };

    double a_, b_;
    mpfr_prec_t prec_;
    std::deque<Cell> values_; // deque: cells never relocate
    std::shared_mutex mutex_;
};

/// Index of the largest-magnitude series term for argument magnitude y.
inline double series_peak_index(double a, double y) {
    if (y <= 1.0) return 1.0;
    return std::pow(y, 1.0 / a) / a;
}

/// log of the largest series term magnitude.
inline double series_peak_log(double a, double b, double y) {
    if (y <= 1.0) return 0.0;
    const double k = series_peak_index(a, y);
    return k * std::log(y) - log_gamma(a * k + b);
}

inline GammaTable& gamma_table(double a, double b, double switch_lo) {
    static std::map<std::pair<double, double>, GammaTable*> tables;
    static std::mutex m;
    std::lock_guard lock(m);
    auto key = std::make_pair(a, b);
    auto it = tables.find(key);
    if (it != tables.end()) return *it->second;
    // precision sized for the worst cancellation the series regime will see
    const double loss_bits = std::max(0.0, series_peak_log(a, b, switch_lo) + 80.0) / kLn2;
    auto prec = static_cast<mpfr_prec_t>(std::min(16384.0, 192.0 + loss_bits));
    auto* table = new GammaTable(a, b, prec); // lives for the process
    tables.emplace(key, table);
    return *table;
}

/// Power series in double precision; ok only when cancellation stays mild.
inline bool series_double(double a, double b, double x, const MlfAccuracy& acc,
                          double* out) {
    double sum = 0.0, max_term = 0.0;
    double log_x = (x == 0.0) ? 0.0 : std::log(std::abs(x));
    for (int k = 0; k <= acc.series_terms_max; ++k) {
        double term;
        if (k == 0) {
            term = reciprocal_gamma(b);
        } else {
            const double lt = k * log_x - log_gamma(a * k + b);
            term = std::exp(lt);
            if (k % 2 == 1 && x < 0.0) term = -term;
        }
        sum += term;
        max_term = std::max(max_term, std::abs(term));
        if (k > 2 && std::abs(term) < 1e-17 * std::max(std::abs(sum), max_term * 1e-14)) {
            const double noise = 4e-16 * max_term * std::sqrt(double(k));
            if (noise <= 0.1 * acc.rel_tol * std::abs(sum)) {
                *out = sum;
                return true;
            }
            return false; // needs extended precision
        }
    }
    throw EvalError("mittag_leffler: series did not converge within series_terms_max terms");
}

/// Power series with MPFR terms: x^k formed by recurrent multiplication,
/// divided by tabulated Gamma(a k + b).
inline double series_mpfr(double a, double b, double x, const MlfAccuracy& acc) {
    GammaTable& table = gamma_table(a, b, acc.regime_switch_lo);
    const mpfr_prec_t prec = table.precision();
    mpfr_t sum, term, power, xm, tmp;
    mpfr_init2(sum, prec);
    mpfr_init2(term, prec);
    mpfr_init2(power, prec);
    mpfr_init2(xm, prec);
    mpfr_init2(tmp, prec);
    mpfr_set_d(xm, x, MPFR_RNDN);
    mpfr_set_ui(power, 1, MPFR_RNDN); // x^k
    mpfr_set_ui(sum, 0, MPFR_RNDN);

    const double peak = series_peak_index(a, std::abs(x));
    double max_log_term = -1e300;
    bool converged = false;
    int k = 0;
    for (; k <= acc.series_terms_max; ++k) {
        if (k > 0) mpfr_mul(power, power, xm, MPFR_RNDN);
        mpfr_div(term, power, table.at(k), MPFR_RNDN);
        mpfr_add(sum, sum, term, MPFR_RNDN);
        if (mpfr_zero_p(term) == 0) {
            long exp_t = mpfr_get_exp(term);
            max_log_term = std::max(max_log_term, double(exp_t) * kLn2);
            if (k > peak && double(exp_t) * kLn2 < max_log_term - double(prec) * kLn2 - 20.0) {
                converged = true;
                break;
            }
        }
    }
    double result = mpfr_get_d(sum, MPFR_RNDN);
    const double resid_prec =
        std::exp(max_log_term - double(prec) * kLn2 + std::log(std::max(1.0, double(k))));
    mpfr_clears(sum, term, power, xm, tmp, static_cast<mpfr_ptr>(nullptr));
    if (!converged)
        throw EvalError("mittag_leffler: series did not converge within series_terms_max terms");
    if (!(std::abs(result) > resid_prec / acc.rel_tol) && std::abs(result) > 0.0) {
        throw EvalError("mittag_leffler: series cancellation exceeded working precision at x=" +
                        std::to_string(x));
    }
    return result;
}

inline double series_regime(double a, double b, double x, const MlfAccuracy& acc) {
    double v = 0.0;
    if (series_double(a, b, x, acc, &v)) return v;
    return series_mpfr(a, b, x, acc);
}

/// Asymptotic expansion E_{a,b}(-y) ~ sum_{k>=1} (-1)^{k-1} y^{-k} / Gamma(b - a k),
/// with the reciprocal-gamma convention killing pole terms.
inline double asymptotic_regime(double a, double b, double x, const MlfAccuracy& acc) {
    const double y = -x;
    const double log_y = std::log(y);
    double sum = 0.0;
    double smallest = 1e300;
    for (int k = 1; k <= 400; ++k) {
        const double arg = b - a * k;
        double term = 0.0;
        if (!is_gamma_pole(arg)) {
            const auto g = log_gamma_signed(arg);
            const double lt = -k * log_y - g.log_abs;
            term = g.sign * std::exp(lt);
            if (k % 2 == 0) term = -term;
        }
        const double mag = std::abs(term);
        if (mag > 0.0 && mag > 4.0 * smallest && k > 3) {
            // divergent tail reached; accept if the optimal truncation was good enough
            if (smallest <= acc.rel_tol * std::abs(sum)) return sum;
            throw EvalError("mittag_leffler: asymptotic expansion cannot reach rel_tol at x=" +
                            std::to_string(x));
        }
        sum += term;
        if (mag > 0.0) smallest = std::min(smallest, mag);
        if (k > 2 && mag <= 0.25 * acc.rel_tol * std::abs(sum) && mag > 0.0) return sum;
    }
    if (smallest <= acc.rel_tol * std::abs(sum)) return sum;
    throw EvalError("mittag_leffler: asymptotic expansion did not converge at x=" +
                    std::to_string(x));
}

/// One trapezoidal pass over the parabolic Bromwich contour s = mu (1 + i u)^2.
/// For x <= 0 the resolvent s^a - x has no poles on the principal sheet, so
/// the contour integral alone is the function value.
inline double contour_pass(double a, double b, double y /* = -x >= 0 */, double mu, double h) {
    const double umax = std::sqrt(1.0 + 42.0 / mu);
    const int n = static_cast<int>(std::ceil(umax / h));
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
        const double u = (j + 0.5) * h;
        const std::complex<double> w(1.0, u);
        const std::complex<double> s = mu * w * w;
        const std::complex<double> ls = std::log(s);
        const std::complex<double> num = std::exp(s + (a - b) * ls);
        const std::complex<double> den = std::exp(a * ls) + y;
        const std::complex<double> sp = std::complex<double>(0.0, 2.0 * mu) * w;
        acc += num / den * sp;
    }
    return (h / kPi) * acc.imag();
}

/// Laplace-inversion regime with magnitude-adaptive contour width: the
/// round-off floor scales like e^mu * eps, so mu is lowered until that floor
/// sits below rel_tol relative to the result.
inline double contour_regime(double a, double b, double x, const MlfAccuracy& acc) {
    const double y = -x;
    const double h0 = 0.16;
    const double probe = contour_pass(a, b, y, 8.0, h0);
    double mu = 8.0;
    const double mag = std::abs(probe);
    if (mag > 0.0 && mag < 1e-2) {
        mu = std::log(mag * 1e6);
        mu = std::min(8.0, std::max(2.0, mu));
    }
    double v1 = (mu == 8.0) ? probe : contour_pass(a, b, y, mu, h0);
    double v2 = contour_pass(a, b, y, mu, h0 * 0.7);
    double err = std::abs(v1 - v2);
    if (err > std::max(acc.rel_tol * std::abs(v2), 1e-15)) {
        const double v3 = contour_pass(a, b, y, mu, h0 * 0.5);
        err = std::abs(v2 - v3);
        if (err > std::max(10.0 * acc.rel_tol * std::abs(v3), 1e-14))
            throw EvalError("mittag_leffler: contour quadrature failed to converge at x=" +
                            std::to_string(x));
        return v3;
    }
    return v2;
}

double dispatch(double a, double b, double x, const MlfAccuracy& acc);

/// a = 1 reduces to exponentials: E_{1,1} = exp; higher b peels off one power
/// at a time; fractional leftover b goes through the extended-precision series
/// (whose cost is benign at a = 1).
inline double classical_regime(double b, double x, const MlfAccuracy& acc) {
    if (b == 1.0) return std::exp(x);
    if (b == 2.0) return x == 0.0 ? 1.0 : std::expm1(x) / x;
    if (b > 1.0 && x != 0.0) {
        const double lower = classical_regime(b - 1.0, x, acc);
        return (lower - reciprocal_gamma(b - 1.0)) / x;
    }
    MlfAccuracy wide = acc;
    wide.regime_switch_lo = std::max(wide.regime_switch_lo, -x + 1.0);
    wide.regime_switch_hi = wide.regime_switch_lo + 1.0;
    return series_mpfr(1.0, b, x, wide);
}

inline double dispatch(double a, double b, double x, const MlfAccuracy& acc) {
    if (x == 0.0) return reciprocal_gamma(b);
    if (a == 1.0) return classical_regime(b, x, acc);
    const double y = -x;
    if (y <= acc.regime_switch_lo) return series_regime(a, b, x, acc);
    if (y >= acc.regime_switch_hi) return asymptotic_regime(a, b, x, acc);
    return contour_regime(a, b, x, acc);
}

} // namespace mlf_detail

/// Mittag-Leffler function E_{a,b}(x) = sum_k x^k / Gamma(a k + b) on the
/// closed negative real axis, for a in (0,1], b > 0.
/// Three regimes: power series (extended precision when the alternation
/// cancels), parabolic-contour Laplace inversion, and the algebraic
/// asymptotic expansion; switch points live in MlfAccuracy.
inline double mittag_leffler(double a, double b, double x, const MlfAccuracy& acc = {}) {
    acc.validate();
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("mittag_leffler: requires a in (0,1]");
    if (!(b > 0.0)) throw DomainError("mittag_leffler: requires b > 0");
    if (!(x <= 0.0)) throw DomainError("mittag_leffler: requires x <= 0");
    return mlf_detail::dispatch(a, b, x, acc);
}

/// One-parameter form E_a(x) = E_{a,1}(x).
inline double mittag_leffler_one(double a, double x, const MlfAccuracy& acc = {}) {
    return mittag_leffler(a, 1.0, x, acc);
}

} // namespace fracheat
