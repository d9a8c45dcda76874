#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fracheat/bessel.hpp"
#include "fracheat/errors.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

/// Shanks/Wynn epsilon acceleration over a sequence of partial sums.
/// Stores one anti-diagonal of the epsilon table.
class WynnEpsilon {
public:
    void append(double s) {
        std::vector<double> next(diag_.size() + 1);
        next[0] = s;
        for (std::size_t k = 1; k < next.size(); ++k) {
            const double denom = next[k - 1] - diag_[k - 1];
            const double prev2 = (k >= 2) ? diag_[k - 2] : 0.0;
            next[k] = (std::abs(denom) > 1e-305) ? prev2 + 1.0 / denom
                                                 : std::numeric_limits<double>::infinity();
        }
        diag_ = std::move(next);
        prev_best_ = best_;
        best_ = pick_best();
    }

    double estimate() const { return best_; }
    double step_change() const { return std::abs(best_ - prev_best_); }
    std::size_t size() const { return diag_.size(); }

private:
    double pick_best() const {
        // deepest finite even column
        if (diag_.empty()) return 0.0;
        int k = static_cast<int>(diag_.size()) - 1;
        if (k % 2 != 0) --k;
        for (; k >= 0; k -= 2)
            if (std::isfinite(diag_[k])) return diag_[k];
        return diag_[0];
    }

    std::vector<double> diag_;
    double best_ = 0.0;
    double prev_best_ = 0.0;
};

struct HankelOptions {
    double rel_tol = 1e-8;   ///< target relative accuracy of the integral
    double abs_tol = 0.0;    ///< optional absolute floor on the target
    /// absolute floor expressed as a fraction of the largest single piece;
    /// bounds the effort when the true value is tiny against the lobe scale
    double piece_floor = 1e-11;
    int max_lobes = 4000;
    int min_lobes = 8;
    double feature_scale = 1.0; ///< rho scale on which the smooth factor varies
};

struct HankelResult {
    double value = 0.0;
    double abs_error = 0.0;
    /// magnitude of the largest single piece; |value|/piece_scale measures how
    /// much cancellation the lobe sum went through, and eps * piece_scale is
    /// the hard floor below which the value is numerical noise
    double piece_scale = 0.0;
    int lobes = 0;
    bool accelerated = false;

    double noise_floor() const { return 1e-13 * piece_scale; }
};

/// Enumerates extra integrand breakpoints (e.g. oscillation nodes of the
/// smooth factor) inside (lo, hi).
using BreakpointFn = std::function<void(double lo, double hi, std::vector<double>&)>;

/// Computes I = int_0^inf F(rho) J_nu(r rho) rho^power d rho for a smooth
/// decaying factor F. The axis is split at the zeros of J_nu(r rho); each
/// lobe is integrated adaptively and the alternating lobe sums are
/// accelerated with the Wynn epsilon algorithm. Plain summation with a
/// geometric tail bound covers non-alternating (beating) integrands.
template <class F>
HankelResult hankel_lobe_integral(F&& factor, double nu, double r, double power,
                                  const HankelOptions& opt = {},
                                  const BreakpointFn& extra_breaks = {},
                                  const std::string& context = "") {
    if (!(r > 0.0)) throw DomainError("hankel_lobe_integral: requires r > 0");
    auto integrand = [&](double rho) {
        return factor(rho) * bessel_j(nu, r * rho) * std::pow(rho, power);
    };
    auto cell_breaks = [&](double lo, double hi) {
        std::vector<double> breaks;
        if (extra_breaks) extra_breaks(lo, hi, breaks);
        return breaks;
    };

    HankelResult out;
    const double lobe_rel = 0.05 * opt.rel_tol;

    // Head [0, z1/r]: no sign change of the Bessel factor; geometric seeding
    // resolves a smooth factor that lives on much smaller scales than z1/r.
    const double head_end = bessel_j_zero(nu, 1) / r;
    std::vector<double> head_breaks = cell_breaks(0.0, head_end);
    for (double s = 0.25 * std::min(opt.feature_scale, head_end); s < head_end; s *= 4.0)
        head_breaks.push_back(s);
    auto head = adaptive_gk_split(integrand, 0.0, head_end, std::move(head_breaks), lobe_rel);
    double plain_sum = head.value;
    double quad_err = head.abs_error;
    double piece_scale = std::abs(head.value);

    WynnEpsilon wynn;
    wynn.append(plain_sum);

    double z_prev = head_end;
    std::vector<double> recent; // last lobe values
    int consecutive_small = 0;
    for (int k = 2; k <= opt.max_lobes + 1; ++k) {
        const double z_next = bessel_j_zero(nu, k) / r;
        auto lobe = adaptive_gk_split(integrand, z_prev, z_next, cell_breaks(z_prev, z_next),
                                      lobe_rel, 1e-3 * opt.rel_tol * piece_scale);
        z_prev = z_next;
        plain_sum += lobe.value;
        quad_err += lobe.abs_error;
        piece_scale = std::max(piece_scale, std::abs(lobe.value));
        wynn.append(plain_sum);
        recent.push_back(lobe.value);
        if (recent.size() > 6) recent.erase(recent.begin());
        out.lobes = k - 1;

        const double est = wynn.estimate();
        const double target = std::max({opt.abs_tol, opt.rel_tol * std::abs(est),
                                        opt.piece_floor * piece_scale});
        if (out.lobes < opt.min_lobes) continue;

        bool alternating = recent.size() >= 5;
        for (std::size_t i = 1; i < recent.size() && alternating; ++i)
            if (!(recent[i] * recent[i - 1] < 0.0)) alternating = false;

        if (alternating && wynn.step_change() <= 0.4 * target &&
            std::abs(recent.back()) < piece_scale) {
            out.value = est;
            out.abs_error = wynn.step_change() + quad_err + 0.1 * target;
            out.piece_scale = piece_scale;
            out.accelerated = true;
            return out;
        }
        if (std::abs(lobe.value) <= 0.25 * target) {
            if (++consecutive_small >= 3) {
                double ratio = 0.0;
                for (std::size_t i = 1; i < recent.size(); ++i) {
                    const double prev_mag = std::abs(recent[i - 1]);
                    if (prev_mag > 0.0)
                        ratio = std::max(ratio, std::abs(recent[i]) / prev_mag);
                }
                ratio = std::min(ratio, 0.95);
                const double tail = std::abs(recent.back()) * ratio / (1.0 - ratio);
                out.value = plain_sum;
                out.abs_error = quad_err + tail;
                out.piece_scale = piece_scale;
                out.accelerated = false;
                return out;
            }
        } else {
            consecutive_small = 0;
        }
    }
    throw EvalError("hankel_lobe_integral: no convergence after " +
                    std::to_string(opt.max_lobes) + " lobes" +
                    (context.empty() ? "" : " at " + context));
}

} // namespace fracheat
