#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/band.hpp"
#include "fracheat/errors.hpp"
#include "fracheat/kernel.hpp"
#include "fracheat/norms.hpp"
#include "fracheat/params.hpp"

namespace fracheat {

/// One decay/growth monomial t^t_exp * (log t)^log_exp * g(t)^g_exp.
struct RateMonomial {
    double t_exp = 0.0;
    int log_exp = 0;
    double g_exp = 0.0;

    /// exponent of the pure power once g(t) = t^theta is substituted
    double combined_exponent(double theta) const { return t_exp + theta * g_exp; }

    double eval(double t, double theta) const {
        double v = std::pow(t, combined_exponent(theta));
        for (int i = 0; i < log_exp; ++i) v *= std::log(t);
        return v;
    }

    bool operator==(const RateMonomial& o) const {
        return t_exp == o.t_exp && log_exp == o.log_exp && g_exp == o.g_exp;
    }
};

/// Predicted rate: a max-envelope of monomials plus a label identifying the
/// rate-table row (region family and branch) it came from.
struct RatePrediction {
    std::vector<RateMonomial> monomials;
    bool boundary_flag = false; ///< gamma or p sits exactly on a row boundary
    std::string branch;

    double envelope(double t, double theta) const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& m : monomials) best = std::max(best, m.eval(t, theta));
        return best;
    }

    /// monomial that wins as t -> infinity (largest combined exponent, then
    /// highest log power)
    RateMonomial dominant(double theta) const {
        RateMonomial best = monomials.front();
        for (const auto& m : monomials) {
            const double d = m.combined_exponent(theta) - best.combined_exponent(theta);
            if (d > 1e-14 || (std::abs(d) <= 1e-14 && m.log_exp > best.log_exp)) best = m;
        }
        return best;
    }

    /// true when the asymptotically dominant term is a pure power that also
    /// dominates numerically across the fitting window
    bool pure_power(double theta, double t_lo = 1e2) const {
        const auto dom = monomials.size() == 1 ? monomials.front() : dominant(theta);
        if (dom.log_exp != 0) return false;
        for (const auto& m : monomials) {
            if (m == dom) continue;
            if (m.combined_exponent(theta) > dom.combined_exponent(theta) - 1e-12 &&
                m.log_exp > 0)
                return false;
        }
        (void)t_lo;
        return true;
    }
};

namespace rates_detail {

inline int compare_gamma(double gamma, double boundary) {
    const double tol = 1e-12 * std::max(1.0, std::abs(boundary));
    if (std::abs(gamma - boundary) <= tol) return 0;
    return gamma < boundary ? -1 : 1;
}

inline std::string branch_tag(int cmp, const char* name) {
    if (cmp < 0) return std::string("gamma<") + name;
    if (cmp == 0) return std::string("gamma=") + name;
    return std::string("gamma>") + name;
}

} // namespace rates_detail

/// Exact rate tables for the four region families. The exponents follow the
/// sharp two-sided estimates; constants are not part of the prediction.
/// On a row boundary both adjacent rows' monomials are returned (combined as
/// a max-envelope) and boundary_flag is set.
inline RatePrediction predict(const ProblemParams& params, const LpExponent& p,
                              const RegionSpec& region) {
    using rates_detail::branch_tag;
    using rates_detail::compare_gamma;
    region.validate(params);
    const double alpha = params.alpha;
    const double beta = params.beta;
    const double gamma = params.gamma;
    const double decay = (alpha * params.dim / (2.0 * beta)) * p.holder_factor();

    RatePrediction out;
    auto add = [&](double t_exp, int log_exp, double g_exp = 0.0) {
        RateMonomial m{t_exp, log_exp, g_exp};
        for (const auto& e : out.monomials)
            if (e == m) return;
        out.monomials.push_back(m);
    };

    switch (region.kind) {
        case RegionSpec::Kind::Exterior: {
            const int c = compare_gamma(gamma, 1.0);
            out.branch = "exterior/" + branch_tag(c, "1");
            if (c < 0) add(alpha - gamma - decay, 0);
            else if (c == 0) { add(alpha - 1.0 - decay, 1); out.boundary_flag = true; }
            else add(alpha - 1.0 - decay, 0);
            return out;
        }
        case RegionSpec::Kind::Compact: {
            const int c = compare_gamma(gamma, 1.0 + alpha);
            out.branch = "compact/" + branch_tag(c, "1+alpha");
            if (c < 0) add(-gamma, 0);
            else if (c == 0) { add(-(1.0 + alpha), 0); out.boundary_flag = true; }
            else add(-(1.0 + alpha), 0);
            return out;
        }
        case RegionSpec::Kind::Intermediate: {
            const double ge = 2.0 * beta - params.dim * p.holder_factor();
            const int c = compare_gamma(gamma, 1.0);
            out.branch = "intermediate/" + branch_tag(c, "1");
            if (c < 0) {
                add(-gamma, 0, ge);
            } else if (c == 0) {
                add(-1.0, 0, ge);
                add(-(1.0 + alpha), 1, ge + 2.0 * beta);
                out.boundary_flag = true;
            } else {
                add(-gamma, 0, ge);
                add(-(1.0 + alpha), 0, ge + 2.0 * beta);
            }
            return out;
        }
        case RegionSpec::Kind::Global: break;
    }

    const auto regime = classify_p(params, p);
    switch (regime) {
        case PRegime::Subcritical: {
            const int c = compare_gamma(gamma, 1.0);
            out.branch = std::string("global/p<p_c/") + branch_tag(c, "1");
            if (c < 0) add(alpha - gamma - decay, 0);
            else if (c == 0) { add(alpha - 1.0 - decay, 1); out.boundary_flag = true; }
            else add(alpha - 1.0 - decay, 0);
            break;
        }
        case PRegime::Critical: {
            const int c = compare_gamma(gamma, 1.0);
            out.branch = std::string("global/p=p_c/") + branch_tag(c, "1");
            if (c < 0) add(-gamma, 1);
            else if (c == 0) { add(-1.0, 1); out.boundary_flag = true; }
            else add(-1.0, 0);
            break;
        }
        case PRegime::MidSupercritical: {
            const double gamma_star = 1.0 - alpha + decay;
            const int c = compare_gamma(gamma, gamma_star);
            out.branch = std::string("global/p_c<p<p_*/") + branch_tag(c, "gamma_*");
            if (c < 0) add(-gamma, 0);
            else if (c == 0) { add(-gamma_star, 0); out.boundary_flag = true; }
            else add(alpha - 1.0 - decay, 0);
            break;
        }
        case PRegime::PStar: {
            const int c = compare_gamma(gamma, 1.0 + alpha);
            out.branch = std::string("global/p=p_*/") + branch_tag(c, "1+alpha");
            if (c < 0) add(-gamma, 0);
            else if (c == 0) {
                add(-(1.0 + alpha), 0);
                add(-(1.0 + alpha), 1);
                out.boundary_flag = true;
            } else add(-(1.0 + alpha), 1);
            break;
        }
        case PRegime::AbovePStar: {
            const int c = compare_gamma(gamma, 1.0 + alpha);
            out.branch = std::string("global/p>p_*/") + branch_tag(c, "1+alpha");
            if (c < 0) add(-gamma, 0);
            else if (c == 0) { add(-(1.0 + alpha), 0); out.boundary_flag = true; }
            else add(-(1.0 + alpha), 0);
            break;
        }
    }
    return out;
}

/// Least-squares line through (log t, log value) inside the window.
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
};

inline FitResult fit_power(const NormSeries& series, double t_lo, double t_hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double t = series.times[i];
        if (t < t_lo * (1.0 - 1e-12) || t > t_hi * (1.0 + 1e-12)) continue;
        if (!(series.values[i] > 0.0))
            throw EvalError("fit_power: nonpositive norm at t=" + std::to_string(t) +
                            " (solver noise floor reached)");
        xs.push_back(std::log(t));
        ys.push_back(std::log(series.values[i]));
    }
    if (xs.size() < 5)
        throw DomainError("fit_power: fewer than 5 series points inside the window");
    const double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    FitResult fit;
    fit.window_lo = t_lo;
    fit.window_hi = t_hi;
    const double det = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return fit;
}

/// Compensated-ratio report value(t)/envelope(t) over the series: the
/// numerical surrogate for an asymptotic two-sided bound. Shape only; a
/// constant offset leaves the max/min ratio at 1.
struct BandCheck {
    Band band;
    double level_min = 0.0;
    double level_max = 0.0;
    double max_over_min() const { return band.ratio(); }
};

inline BandCheck check_band(const NormSeries& series, const RatePrediction& prediction) {
    if (series.values.empty()) throw DomainError("check_band: empty series");
    BandCheck chk;
    const double theta = series.region.theta();
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        if (!(series.values[i] > 0.0))
            throw EvalError("check_band: nonpositive norm at t=" +
                            std::to_string(series.times[i]));
        chk.band.absorb(series.values[i] / prediction.envelope(series.times[i], theta));
    }
    chk.level_min = chk.band.lo;
    chk.level_max = chk.band.hi;
    return chk;
}

/// Compensated deviation from the limit profile in the time-integrable case:
///   t^(1 - alpha + (alpha N / 2 beta)(1 - 1/p)) || u(.,t) - M_inf Y(.,t) ||_p,
/// with M_inf = (spatial mass) / (gamma - 1). Requires gamma > 1 and
/// subcritical p.
struct LimitProfileOptions {
    SolveOptions solve{};
    int points_per_decade = 64;
    double xi_cap = 14.0;
};

inline double limit_profile_deviation(const ProblemParams& params, const KernelProfile& profile,
                                      const Forcing& forcing, const LpExponent& p, double t,
                                      const LimitProfileOptions& opts = {}) {
    if (!(forcing.gamma() > 1.0))
        throw DomainError("limit_profile_deviation: requires gamma > 1 (time-integrable forcing)");
    if (classify_p(params, p) != PRegime::Subcritical || p.is_inf())
        throw DomainError("limit_profile_deviation: requires p in [1, p_c)");
    if (!(t > 0.0)) throw DomainError("limit_profile_deviation: requires t > 0");

    const double mass_inf = forcing.spatial_mass(params.dim) / (forcing.gamma() - 1.0);
    auto grid = norms_detail::region_grid(params, RegionSpec::global(), t,
                                          opts.points_per_decade, opts.xi_cap);
    auto slice = solve_radial(params, forcing, t, grid, opts.solve);
    RadialSolutionSlice dev = slice;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dev.values[i] = slice.values[i] - mass_inf * eval_Y(profile, grid[i], t);
        // the difference inherits the solver noise plus the profile accuracy
        dev.noise[i] = slice.noise[i];
        dev.accuracy[i] = std::abs(dev.values[i]) > 0.0 ? dev.noise[i] / std::abs(dev.values[i])
                                                        : 1.0;
    }
    const double norm = lp_norm_region(dev, p, RegionSpec::global(), params);
    const double compensation =
        1.0 - params.alpha + (params.alpha * params.dim / (2.0 * params.beta)) * p.holder_factor();
    return std::pow(t, compensation) * norm;
}

/// M_inf itself (the limit-profile coefficient).
inline double limit_profile_mass(const ProblemParams& params, const Forcing& forcing) {
    if (!(forcing.gamma() > 1.0))
        throw DomainError("limit_profile_mass: requires gamma > 1");
    return forcing.spatial_mass(params.dim) / (forcing.gamma() - 1.0);
}

} // namespace fracheat
