#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/errors.hpp"
#include "fracheat/kernel.hpp"
#include "fracheat/mildsol.hpp"
#include "fracheat/params.hpp"

namespace fracheat {

/// The four region families of the rate theory. Exterior and Intermediate
/// radii are functions of time; Compact is a fixed ball.
struct RegionSpec {
    enum class Kind { Global, Exterior, Compact, Intermediate };
    Kind kind = Kind::Global;
    double nu = 1.0;         ///< inner factor (Exterior, Intermediate)
    double mu = 2.0;         ///< outer factor (Intermediate)
    double r0 = 2.0;         ///< ball radius (Compact)
    double g_exponent = 0.1; ///< theta in g(t) = t^theta (Intermediate)

    static RegionSpec global() { return {}; }
    static RegionSpec exterior(double nu) {
        RegionSpec r;
        r.kind = Kind::Exterior;
        r.nu = nu;
        return r;
    }
    static RegionSpec compact(double r0) {
        RegionSpec r;
        r.kind = Kind::Compact;
        r.r0 = r0;
        return r;
    }
    static RegionSpec intermediate(double nu, double mu, double theta) {
        RegionSpec r;
        r.kind = Kind::Intermediate;
        r.nu = nu;
        r.mu = mu;
        r.g_exponent = theta;
        return r;
    }

    void validate(const ProblemParams& params) const {
        switch (kind) {
            case Kind::Global: return;
            case Kind::Exterior:
                if (!(nu > 0.0)) throw ConfigError("RegionSpec: exterior needs nu > 0");
                return;
            case Kind::Compact:
                if (!(r0 > 0.0)) throw ConfigError("RegionSpec: compact needs R0 > 0");
                return;
            case Kind::Intermediate:
                if (!(nu > 0.0 && mu > nu))
                    throw ConfigError("RegionSpec: intermediate needs 0 < nu < mu");
                if (!(g_exponent > 0.0 && g_exponent < params.diffusive_exponent()))
                    throw ConfigError(
                        "RegionSpec: intermediate needs 0 < theta < alpha/(2 beta) so that "
                        "g grows but stays below the diffusive scale");
                return;
        }
    }

    /// Scale function exponent: g(t) = t^theta for Intermediate, else none.
    double theta() const { return kind == Kind::Intermediate ? g_exponent : 0.0; }

    /// Radial interval at time t; second = +inf for unbounded regions.
    std::pair<double, double> interval(const ProblemParams& params, double t) const {
        const double inf = std::numeric_limits<double>::infinity();
        switch (kind) {
            case Kind::Global: return {0.0, inf};
            case Kind::Exterior: return {nu * params.diffusive_scale(t), inf};
            case Kind::Compact: return {0.0, r0};
            case Kind::Intermediate: {
                const double g = std::pow(t, g_exponent);
                return {nu * g, mu * g};
            }
        }
        return {0.0, inf};
    }

    std::string str() const {
        std::ostringstream os;
        switch (kind) {
            case Kind::Global: os << "global"; break;
            case Kind::Exterior: os << "exterior(nu=" << nu << ")"; break;
            case Kind::Compact: os << "compact(R0=" << r0 << ")"; break;
            case Kind::Intermediate:
                os << "intermediate(nu=" << nu << ",mu=" << mu << ",theta=" << g_exponent << ")";
                break;
        }
        return os.str();
    }
};

namespace norms_detail {

/// |u| at r interpolated within cell [i, i+1]: power law in (log r, log u)
/// when both endpoints are safely positive, else linear in r.
struct CellModel {
    double r0, r1, u0, u1;
    bool loglog;

    double eval(double r) const {
        if (loglog) {
            const double m = std::log(u1 / u0) / std::log(r1 / r0);
            return u0 * std::pow(r / r0, m);
        }
        const double w = (r - r0) / (r1 - r0);
        return (1.0 - w) * u0 + w * u1;
    }
};

} // namespace norms_detail

/// L^p norm of a slice restricted to a region:
///   ( omega_{N-1} int |u(r)|^p r^(N-1) dr )^(1/p),
/// with u interpolated between grid points (interpolate u, then raise to p);
/// p = inf reads the max over covered grid points. Values below their own
/// noise floor count as zero so that far-field quadrature noise cannot be
/// amplified by the r^(N-1) weight.
inline double lp_norm_region(const RadialSolutionSlice& slice, const LpExponent& p,
                             const RegionSpec& region, const ProblemParams& params) {
    region.validate(params);
    auto [lo, hi] = region.interval(params, slice.t);
    const auto& r = slice.radii;
    if (r.size() < 2) throw CoverageError("lp_norm_region: slice grid too small");
    const double grid_lo = r.front(), grid_hi = r.back();

    // Coverage: bounded regions must be inside the grid (a sliver below the
    // first grid point is tolerated, u is continuous at the origin).
    if (lo > 0.0 && lo < grid_lo * (1.0 - 1e-9)) {
        std::ostringstream os;
        os << "lp_norm_region: region starts at " << lo << " but grid starts at " << grid_lo;
        throw CoverageError(os.str());
    }
    if (std::isfinite(hi) && hi > grid_hi * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "lp_norm_region: region ends at " << hi << " but grid ends at " << grid_hi;
        throw CoverageError(os.str());
    }
    const double a = std::max(lo, grid_lo);
    const double b = std::min(hi, grid_hi);
    if (!(a < b) && !p.is_inf()) return 0.0;

    auto usable = [&](std::size_t i) {
        const double v = std::abs(slice.values[i]);
        return std::isfinite(slice.values[i]) && v > 3.0 * slice.noise[i] ? v : 0.0;
    };

    if (p.is_inf()) {
        double m = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            if (r[i] >= lo && r[i] <= hi) m = std::max(m, usable(i));
        return m;
    }

    const double pv = p.value();
    const double dim = params.dim;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        const double c_lo = std::max(a, r[i]);
        const double c_hi = std::min(b, r[i + 1]);
        if (!(c_lo < c_hi)) continue;
        const double u0 = usable(i), u1 = usable(i + 1);
        if (u0 == 0.0 && u1 == 0.0) continue;
        norms_detail::CellModel cell{r[i], r[i + 1], u0, u1, u0 > 0.0 && u1 > 0.0};
        auto f = [&](double rr) {
            return std::pow(cell.eval(rr), pv) * std::pow(rr, dim - 1.0);
        };
        total += gauss8(f, c_lo, c_hi);
    }
    // sliver below the grid for regions reaching the origin: u ~ u(grid_lo)
    if (lo == 0.0 && b > grid_lo) {
        const double u0 = usable(0);
        total += std::pow(u0, pv) * std::pow(grid_lo, dim) / dim;
    }
    return std::pow(kernel_detail::sphere_area(params.dim) * total, 1.0 / pv);
}

/// Norms of u(.,t) along a time sequence for one (p, region) case.
struct NormSeries {
    LpExponent p;
    RegionSpec region;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> accuracy;       ///< relative estimate per time
    std::vector<double> values_refined; ///< same norms on a 2x finer radial grid
    std::vector<RadialSolutionSlice> slices; ///< kept when requested

    /// worst relative change under grid refinement (the stability gate)
    double refinement_drift() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] > 0.0)
                worst = std::max(worst, std::abs(values_refined[i] / values[i] - 1.0));
        return worst;
    }
};

struct NormSeriesOptions {
    SolveOptions solve{};
    int points_per_decade = 64;
    bool refined = true;     ///< also compute each norm on a doubled grid
    bool keep_slices = false;
    int jobs = 0;
    /// far-field cutoff in diffusive units; beyond it the true solution is
    /// orders of magnitude under the quadrature floor (beta = 1 only)
    double xi_cap = 14.0;
};

namespace norms_detail {

inline std::vector<double> geometric_grid(double lo, double hi, int per_decade) {
    const int n = std::max(8, int(std::ceil(std::log10(hi / lo) * per_decade)) + 1);
    std::vector<double> g(n);
    const double step = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) g[i] = lo * std::exp(step * i);
    g.back() = hi;
    return g;
}

/// radial grid covering the region at time t plus the fixed compact window
inline std::vector<double> region_grid(const ProblemParams& params, const RegionSpec& region,
                                       double t, int per_decade, double xi_cap) {
    const double scale = params.diffusive_scale(t);
    const double far = (params.beta == 1.0 ? std::min(100.0, xi_cap) : 100.0) * scale;
    switch (region.kind) {
        case RegionSpec::Kind::Global:
            return geometric_grid(1e-2, std::max(10.0, far), per_decade);
        case RegionSpec::Kind::Exterior: {
            const double lo = region.nu * scale;
            return geometric_grid(0.98 * lo, std::max(4.0 * lo, far), per_decade);
        }
        case RegionSpec::Kind::Compact:
            return geometric_grid(1e-2, region.r0, per_decade);
        case RegionSpec::Kind::Intermediate: {
            const double g = std::pow(t, region.g_exponent);
            return geometric_grid(0.98 * region.nu * g, 1.02 * region.mu * g, per_decade);
        }
    }
    return geometric_grid(1e-2, 10.0, per_decade);
}

inline double slice_norm_accuracy(const RadialSolutionSlice& slice, const RegionSpec& region,
                                  const ProblemParams& params, double norm_value,
                                  const LpExponent& p) {
    auto [lo, hi] = region.interval(params, slice.t);
    double acc = 0.0;
    for (std::size_t i = 0; i < slice.radii.size(); ++i) {
        const double r = slice.radii[i];
        if (r < lo || r > hi) continue;
        if (!(std::abs(slice.values[i]) > 3.0 * slice.noise[i])) continue;
        acc = std::max(acc, std::min(slice.accuracy[i], 1.0));
    }
    (void)norm_value;
    (void)p;
    return acc;
}

} // namespace norms_detail

/// Computes the norm series: one slice per time on a region-adapted radial
/// grid (plus a 2x refined companion sharing the same Duhamel table), with
/// accuracy propagated from the slice estimates. Parallel over times.
inline NormSeries norm_series(const ProblemParams& params, const Forcing& forcing,
                              const LpExponent& p, const RegionSpec& region,
                              const std::vector<double>& times,
                              const NormSeriesOptions& opts = {}) {
    region.validate(params);
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] > 0.0 && times[i] < times[i + 1]))
            throw DomainError("norm_series: times must be positive and increasing");

    NormSeries series;
    series.p = p;
    series.region = region;
    series.times = times;
    series.values.assign(times.size(), 0.0);
    series.accuracy.assign(times.size(), 0.0);
    series.values_refined.assign(times.size(), 0.0);
    if (opts.keep_slices) series.slices.resize(times.size());

    parallel_for(times.size(), opts.jobs, [&](std::size_t i) {
        const double t = times[i];
        SolveOptions solve = opts.solve;
        solve.jobs = 1; // parallelism lives at the time level
        DuhamelTable table(params, forcing, t, solve.table_tol, solve.mlf, 1);
        auto grid = norms_detail::region_grid(params, region, t, opts.points_per_decade,
                                              opts.xi_cap);
        auto slice = solve_radial(table, grid, solve);
        series.values[i] = lp_norm_region(slice, p, region, params);
        series.accuracy[i] =
            norms_detail::slice_norm_accuracy(slice, region, params, series.values[i], p);
        if (opts.refined) {
            auto fine = norms_detail::region_grid(params, region, t,
                                                  2 * opts.points_per_decade, opts.xi_cap);
            auto fine_slice = solve_radial(table, fine, solve);
            series.values_refined[i] = lp_norm_region(fine_slice, p, region, params);
        }
        if (opts.keep_slices) series.slices[i] = std::move(slice);
    });
    return series;
}

/// NormSeries CSV: metadata header block, then "t,norm,acc" rows.
inline void write_series_csv(const NormSeries& series, const ProblemParams& params,
                             const Forcing& forcing, std::ostream& os) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "# alpha=%.17g beta=%.17g dim=%d gamma=%.17g spatial=%s\n",
                  params.alpha, params.beta, params.dim, forcing.gamma(),
                  forcing.descriptor().c_str());
    os << buf;
    os << "# p=" << series.p.str() << " region=" << series.region.str() << "\n";
    os << "t,norm,acc\n";
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.3g\n", series.times[i], series.values[i],
                      series.accuracy[i]);
        os << buf;
    }
}

} // namespace fracheat
