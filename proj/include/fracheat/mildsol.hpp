#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracheat/errors.hpp"
#include "fracheat/gammafn.hpp"
#include "fracheat/hankel.hpp"
#include "fracheat/kernel.hpp"
#include "fracheat/mittag_leffler.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/params.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

/// Separable radial forcing f(x,t) = (1+t)^(-gamma) * spatial(|x|).
/// Compactly supported spatial parts satisfy every hypothesis the rate
/// theory needs at supercritical p; the constructor records which hold.
class Forcing {
public:
    enum class Spatial { Ball, Shell, Sampled };

    struct Hypotheses {
        bool l1_time_decay = false;   ///< ||f(.,t)||_1 <= C (1+t)^-gamma
        bool pointwise_decay = false; ///< |f| <= C |x|^-N for large |x|
        bool q_integrability = false; ///< ||f(.,t)||_q <= C (1+t)^-gamma for all q
    };

    static Forcing ball(double gamma, double radius) {
        if (!(radius > 0.0)) throw ConfigError("Forcing::ball: radius must be positive");
        Forcing f;
        f.gamma_ = gamma;
        f.kind_ = Spatial::Ball;
        f.r2_ = radius;
        return f;
    }

    static Forcing shell(double gamma, double r1, double r2) {
        if (!(r1 >= 0.0 && r2 >= r1))
            throw ConfigError("Forcing::shell: needs 0 <= r1 <= r2");
        Forcing f;
        f.gamma_ = gamma;
        f.kind_ = Spatial::Shell;
        f.r1_ = r1;
        f.r2_ = r2;
        return f;
    }

    static Forcing sampled(double gamma, std::vector<double> radii, std::vector<double> values) {
        if (radii.size() != values.size() || radii.size() < 2)
            throw ConfigError("Forcing::sampled: needs matching radius/value arrays");
        for (std::size_t i = 0; i + 1 < radii.size(); ++i)
            if (!(radii[i] > 0.0 && radii[i] < radii[i + 1]))
                throw ConfigError("Forcing::sampled: radii must be positive and increasing");
        Forcing f;
        f.gamma_ = gamma;
        f.kind_ = Spatial::Sampled;
        f.sample_radii_ = std::move(radii);
        f.sample_values_ = std::move(values);
        f.r2_ = f.sample_radii_.back();
        return f;
    }

    double gamma() const { return gamma_; }
    Spatial kind() const { return kind_; }
    double ball_radius() const { return r2_; }
    double shell_inner() const { return r1_; }
    double support_radius() const { return r2_; }

    /// every spatial variant here has compact support
    Hypotheses hypotheses() const { return {true, true, true}; }

    std::optional<double> pointwise_decay_exponent;

    /// L1 mass of the spatial part.
    double spatial_mass(int dim) const {
        switch (kind_) {
            case Spatial::Ball: return ball_volume(dim, r2_);
            case Spatial::Shell: return ball_volume(dim, r2_) - ball_volume(dim, r1_);
            case Spatial::Sampled: {
                const double area = kernel_detail::sphere_area(dim);
                auto f = [&](double r) {
                    return sample_value(r) * std::pow(r, dim - 1.0);
                };
                double total = 0.0;
                for (std::size_t i = 0; i + 1 < sample_radii_.size(); ++i)
                    total += gauss8(f, sample_radii_[i], sample_radii_[i + 1]);
                return area * total;
            }
        }
        return 0.0;
    }

    /// || f(.,t) ||_L1 = spatial mass * (1+t)^(-gamma).
    double l1_norm(int dim, double t) const {
        return spatial_mass(dim) * std::pow(1.0 + t, -gamma_);
    }

    double time_factor(double t) const { return std::pow(1.0 + t, -gamma_); }

    /// piecewise-linear lookup of a sampled spatial part
    double sample_value(double r) const {
        if (r <= sample_radii_.front()) return sample_values_.front();
        if (r >= sample_radii_.back()) return 0.0;
        auto it = std::upper_bound(sample_radii_.begin(), sample_radii_.end(), r);
        const std::size_t i = it - sample_radii_.begin() - 1;
        const double w = (r - sample_radii_[i]) / (sample_radii_[i + 1] - sample_radii_[i]);
        return (1.0 - w) * sample_values_[i] + w * sample_values_[i + 1];
    }

    const std::vector<double>& sample_radii() const { return sample_radii_; }

    std::string descriptor() const {
        std::ostringstream os;
        switch (kind_) {
            case Spatial::Ball: os << "ball:R=" << r2_; break;
            case Spatial::Shell: os << "shell:R1=" << r1_ << ":R2=" << r2_; break;
            case Spatial::Sampled: os << "sampled:n=" << sample_radii_.size(); break;
        }
        return os.str();
    }

    Forcing with_gamma(double g) const {
        Forcing f = *this;
        f.gamma_ = g;
        return f;
    }

    static double ball_volume(int dim, double radius) {
        return std::exp(0.5 * dim * std::log(kernel_detail::kPi) - log_gamma(0.5 * dim + 1.0) +
                        dim * std::log(radius));
    }

private:
    Forcing() = default;
    double gamma_ = 0.0;
    Spatial kind_ = Spatial::Ball;
    double r1_ = 0.0, r2_ = 1.0;
    std::vector<double> sample_radii_, sample_values_;
};

namespace mildsol_detail {

/// (2 pi)^(N/2) rho^(-N/2) R^(N/2) J_{N/2}(R rho) for the ball, with the
/// rho -> 0 limit |B_R| taken through the ascending series.
inline double ball_hat(int dim, double radius, double rho) {
    const double x = radius * rho;
    const double volume = Forcing::ball_volume(dim, radius);
    if (x < 0.5) {
        // |B_R| * sum_k (-(x/2)^2)^k Gamma(N/2+1) / (k! Gamma(N/2+1+k))
        const double q = -0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 12; ++k) {
            term *= q / (k * (0.5 * dim + k));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return volume * sum;
    }
    const double half_n = 0.5 * dim;
    return std::pow(2.0 * kernel_detail::kPi, half_n) * std::pow(rho, -half_n) *
           std::pow(radius, half_n) * bessel_j(half_n, x);
}

} // namespace mildsol_detail

/// Radial Fourier transform of the spatial part of the forcing.
inline double hat_spatial(const Forcing& forcing, int dim, double rho) {
    if (!(rho >= 0.0)) throw DomainError("hat_spatial: requires rho >= 0");
    switch (forcing.kind()) {
        case Forcing::Spatial::Ball:
            if (rho == 0.0) return Forcing::ball_volume(dim, forcing.ball_radius());
            return mildsol_detail::ball_hat(dim, forcing.ball_radius(), rho);
        case Forcing::Spatial::Shell: {
            if (forcing.shell_inner() == forcing.support_radius()) return 0.0;
            if (rho == 0.0) return forcing.spatial_mass(dim);
            double outer = mildsol_detail::ball_hat(dim, forcing.support_radius(), rho);
            double inner = forcing.shell_inner() > 0.0
                               ? mildsol_detail::ball_hat(dim, forcing.shell_inner(), rho)
                               : 0.0;
            return outer - inner;
        }
        case Forcing::Spatial::Sampled: {
            if (rho == 0.0) return forcing.spatial_mass(dim);
            const double half_n = 0.5 * dim;
            const double nu = half_n - 1.0;
            auto f = [&](double r) {
                return forcing.sample_value(r) * bessel_j(nu, r * rho) * std::pow(r, half_n);
            };
            double total = 0.0;
            const auto& rs = forcing.sample_radii();
            for (std::size_t i = 0; i + 1 < rs.size(); ++i)
                total += adaptive_gk(f, rs[i], rs[i + 1], 1e-10).value;
            return std::pow(2.0 * kernel_detail::kPi, half_n) * std::pow(rho, 1.0 - half_n) *
                   total;
        }
    }
    return 0.0;
}

/// Time integral of the Duhamel formula in Fourier variables:
///   int_0^t tau^(alpha-1) E_{alpha,alpha}(-rho^{2 beta} tau^alpha) (1+t-tau)^(-gamma) dtau,
/// evaluated after the substitution tau = w^(1/alpha), which removes the
/// endpoint singularity exactly.
inline double duhamel_hat(const ProblemParams& params, const Forcing& forcing, double rho,
                          double t, double tol = 1e-8, const MlfAccuracy& mlf = {}) {
    if (!(t > 0.0)) throw DomainError("duhamel_hat: requires t > 0");
    if (!(rho >= 0.0)) throw DomainError("duhamel_hat: requires rho >= 0");
    const double alpha = params.alpha;
    const double lambda = std::pow(rho, 2.0 * params.beta);
    const double gamma = forcing.gamma();
    const double w_end = std::pow(t, alpha);

    auto integrand = [&](double w) {
        const double tau = std::pow(w, 1.0 / alpha);
        const double age = std::max(0.0, t - tau);
        const double e = (lambda * w > 0.0)
                             ? mittag_leffler(alpha, alpha, -lambda * w, mlf)
                             : reciprocal_gamma(alpha);
        return e * std::pow(1.0 + age, -gamma);
    };

    // seed the adaptive pass with the spectral boundary layer near w = 0 and
    // the forcing-variation ladder near tau = t
    std::vector<double> breaks;
    if (lambda > 0.0) {
        for (double w = 0.01 / lambda; w < w_end; w *= 8.0) breaks.push_back(w);
    }
    for (double d = 0.5; d < 0.5 * t; d *= 4.0)
        breaks.push_back(std::pow(t - d, alpha));
    breaks.push_back(std::pow(0.5 * t, alpha));

    auto res = adaptive_gk_split(integrand, 0.0, w_end, std::move(breaks), tol);
    if (res.abs_error > 100.0 * tol * std::max(std::abs(res.value), 1e-300) &&
        res.abs_error > 1e-14)
        throw EvalError("duhamel_hat: time quadrature did not converge at rho=" +
                        std::to_string(rho) + ", t=" + std::to_string(t));
    return res.value / alpha;
}

/// Tabulated rho -> duhamel_hat(rho, t) for one slice time: the solver
/// evaluates the symbol at thousands of quadrature nodes per radius, and the
/// time integral is smooth in lambda = rho^{2 beta}, so a cubic table in
/// log lambda replaces repeated adaptive quadrature. Read-only after build.
class DuhamelTable {
public:
    DuhamelTable(const ProblemParams& params, const Forcing& forcing, double t,
                 double tol = 1e-8, const MlfAccuracy& mlf = {}, int jobs = 1)
        : params_(params), forcing_(forcing), t_(t), mlf_(mlf) {
        const double w_end = std::pow(t, params.alpha);
        value0_ = duhamel_hat(params, forcing, 0.0, t, tol, mlf);
        lambda_lo_ = 1e-5 / w_end;
        lambda_hi_ = 1e9;
        build(tol, 48, jobs);
        // verify the interpolant at cell midpoints; densify once if needed
        if (midpoint_error() > 50.0 * tol) build(tol, 96, jobs);
    }

    double t() const { return t_; }
    const ProblemParams& params() const { return params_; }
    const Forcing& forcing() const { return forcing_; }

    /// T(rho, t) by table lookup.
    double time_factor(double rho) const {
        const double lambda = std::pow(rho, 2.0 * params_.beta);
        if (lambda <= lambda_lo_) {
            const double w = lambda / lambda_lo_;
            return (1.0 - w) * value0_ + w * first_value_;
        }
        const double ll = std::log(lambda);
        if (lambda >= lambda_hi_) // quasi-static power tail
            return std::exp(tail_logc_ + tail_slope_ * ll);
        const double pos = (ll - log_lo_) / step_;
        auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= log_T_.size()) i = log_T_.size() - 2;
        const double w = pos - double(i);
        if (i == 0 || i + 2 >= log_T_.size())
            return std::exp((1.0 - w) * log_T_[i] + w * log_T_[i + 1]);
        const double y0 = log_T_[i - 1], y1 = log_T_[i], y2 = log_T_[i + 1], y3 = log_T_[i + 2];
        const double a = w + 1.0, b = w, c = w - 1.0, d = w - 2.0;
        return std::exp((-y0 * b * c * d + 3.0 * y1 * a * c * d - 3.0 * y2 * a * b * d +
                         y3 * a * b * c) / 6.0);
    }

    double direct(double rho, double tol = 1e-9) const {
        return duhamel_hat(params_, forcing_, rho, t_, tol, mlf_);
    }

private:
    void build(double tol, int per_decade, int jobs) {
        log_lo_ = std::log(lambda_lo_);
        const double log_hi = std::log(lambda_hi_);
        const int cells = std::max(64, int(std::ceil((log_hi - log_lo_) / std::log(10.0) *
                                                     per_decade)));
        step_ = (log_hi - log_lo_) / cells;
        log_T_.assign(cells + 1, 0.0);
        const double beta_inv = 0.5 / params_.beta;
        parallel_for(log_T_.size(), jobs, [&](std::size_t i) {
            const double lambda = std::exp(log_lo_ + step_ * double(i));
            const double rho = std::pow(lambda, beta_inv);
            log_T_[i] = std::log(duhamel_hat(params_, forcing_, rho, t_, 0.1 * tol, mlf_));
        });
        first_value_ = std::exp(log_T_.front());
        // power-law extrapolation fitted on the last decade
        const int last = int(std::round(std::log(10.0) / step_));
        const double l1 = log_lo_ + step_ * double(log_T_.size() - 1 - last);
        const double l2 = log_hi;
        tail_slope_ = (log_T_.back() - log_T_[log_T_.size() - 1 - last]) / (l2 - l1);
        tail_logc_ = log_T_.back() - tail_slope_ * l2;
    }

    double midpoint_error() {
        double worst = 0.0;
        const double beta_inv = 0.5 / params_.beta;
        for (std::size_t i = 5; i + 5 < log_T_.size(); i += std::max<std::size_t>(7, log_T_.size() / 40)) {
            const double lambda = std::exp(log_lo_ + step_ * (double(i) + 0.5));
            const double rho = std::pow(lambda, beta_inv);
            const double exact = direct(rho, 1e-10);
            const double interp = time_factor(rho);
            worst = std::max(worst, std::abs(interp - exact) / std::abs(exact));
        }
        return worst;
    }

    ProblemParams params_;
    Forcing forcing_;
    double t_;
    MlfAccuracy mlf_;
    double value0_ = 0.0, first_value_ = 0.0;
    double lambda_lo_ = 0.0, lambda_hi_ = 0.0;
    double log_lo_ = 0.0, step_ = 0.0;
    double tail_slope_ = -1.0, tail_logc_ = 0.0;
    std::vector<double> log_T_;
};

/// u(.,t) sampled on a radial grid at one time.
struct RadialSolutionSlice {
    double t = 0.0;
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<double> accuracy; ///< estimated relative error per radius
    std::vector<double> noise;    ///< absolute noise floor per radius
};

struct SolveOptions {
    double rel_tol = 1e-7;   ///< Hankel inversion target per radius
    double table_tol = 5e-8; ///< Duhamel table build tolerance
    MlfAccuracy mlf{};
    int jobs = 0;
    int max_lobes = 6000;
};

/// One radius of the Fourier-radial inversion
inline HankelResult solve_point_raw(const DuhamelTable& table, double r,
                                    const SolveOptions& opts = {}) {
    const auto& params = table.params();
    const auto& forcing = table.forcing();
    const int dim = params.dim;
    const double nu = 0.5 * dim - 1.0;

    auto factor = [&](double rho) {
        return hat_spatial(forcing, dim, rho) * table.time_factor(rho);
    };
    // the transform of a ball/shell oscillates at the support scale; hand its
    // sign changes to the lobe integrator as explicit breakpoints
    BreakpointFn breaks;
    if (forcing.kind() != Forcing::Spatial::Sampled) {
        const double half_n = 0.5 * dim;
        const double r_support = forcing.support_radius();
        breaks = [half_n, r_support](double lo, double hi, std::vector<double>& out) {
            if (r_support <= 0.0) return;
            for (int m = 1; m < 100000; ++m) {
                const double z = bessel_j_zero(half_n, m) / r_support;
                if (z >= hi) break;
                if (z > lo) out.push_back(z);
            }
        };
    }
    HankelOptions hopt;
    hopt.rel_tol = opts.rel_tol;
    hopt.feature_scale = std::min(1.0, 1.0 / forcing.support_radius());
    hopt.max_lobes = opts.max_lobes;
    hopt.piece_floor = 1e-11;
    auto res = hankel_lobe_integral(factor, nu, r, 0.5 * dim, hopt, breaks,
                                    "slice r=" + std::to_string(r) +
                                        " t=" + std::to_string(table.t()));
    const double scale =
        std::pow(2.0 * kernel_detail::kPi, -0.5 * dim) * std::pow(r, 1.0 - 0.5 * dim);
    res.value *= scale;
    res.abs_error *= scale;
    res.piece_scale *= scale;
    return res;
}

/// u(r, t) for a single radius.
inline double solve_point(const ProblemParams& params, const Forcing& forcing, double r,
                          double t, const SolveOptions& opts = {}) {
    DuhamelTable table(params, forcing, t, opts.table_tol, opts.mlf, opts.jobs);
    return solve_point_raw(table, r, opts).value;
}

/// Mild-solution slice via the Fourier-radial path, parallel over radii.
/// Individual radius failures are tolerated up to 10% of the grid (failed
/// entries carry infinite accuracy); more than that fails the slice.
inline RadialSolutionSlice solve_radial(const DuhamelTable& table,
                                        const std::vector<double>& radii,
                                        const SolveOptions& opts = {}) {
    RadialSolutionSlice slice;
    slice.t = table.t();
    slice.radii = radii;
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] > 0.0 && radii[i] < radii[i + 1]))
            throw DomainError("solve_radial: radii must be positive and increasing");
    slice.values.assign(radii.size(), 0.0);
    slice.accuracy.assign(radii.size(), 1.0);
    slice.noise.assign(radii.size(), 0.0);
    std::vector<int> failed(radii.size(), 0);
    parallel_for(radii.size(), opts.jobs, [&](std::size_t i) {
        try {
            auto res = solve_point_raw(table, radii[i], opts);
            slice.values[i] = res.value;
            slice.noise[i] = std::max(res.noise_floor(), res.abs_error);
            slice.accuracy[i] =
                std::abs(res.value) > 0.0 ? slice.noise[i] / std::abs(res.value) : 1.0;
        } catch (const EvalError&) {
            failed[i] = 1;
            slice.values[i] = 0.0;
            slice.accuracy[i] = std::numeric_limits<double>::infinity();
            slice.noise[i] = std::numeric_limits<double>::infinity();
        }
    });
    const int n_failed = std::accumulate(failed.begin(), failed.end(), 0);
    if (n_failed * 10 > static_cast<int>(radii.size()))
        throw EvalError("solve_radial: " + std::to_string(n_failed) + " of " +
                        std::to_string(radii.size()) + " radii failed at t=" +
                        std::to_string(table.t()));
    return slice;
}

inline RadialSolutionSlice solve_radial(const ProblemParams& params, const Forcing& forcing,
                                        double t, const std::vector<double>& radii,
                                        const SolveOptions& opts = {}) {
    DuhamelTable table(params, forcing, t, opts.table_tol, opts.mlf, opts.jobs);
    return solve_radial(table, radii, opts);
}

/// Options for the direct space-time quadrature oracle. Panel counts are
/// fixed and plain on purpose; the oracle shares nothing with the Fourier
/// path beyond the special functions.
struct OracleOptions {
    int time_panels = 48;
    int radial_panels = 16;
    int angular_panels = 12;
    double time_grading = 5.0; ///< resolves the age^(alpha-1) layer at age -> 0
    double spatial_grading = 2.0;
};

/// Brute-force evaluation of the Duhamel space-time integral
///   u(x,t) = int_0^t int_{R^N} Y(x-y, t-s) f(y,s) dy ds
/// for radial compactly supported forcing, reduced to a (kernel age, |y|,
/// angle) triple integral on graded composite Gauss meshes.
inline double solve_direct_oracle(const ProblemParams& params, const KernelProfile& profile,
                                  const Forcing& forcing, double r, double t,
                                  const OracleOptions& opts = {}) {
    if (forcing.kind() == Forcing::Spatial::Sampled)
        throw DomainError("solve_direct_oracle: needs an indicator forcing");
    if (!(t > 0.0 && r >= 0.0)) throw DomainError("solve_direct_oracle: bad (r, t)");
    const int dim = params.dim;
    const double lo = forcing.kind() == Forcing::Spatial::Shell ? forcing.shell_inner() : 0.0;
    const double hi = forcing.support_radius();
    if (hi <= lo) return 0.0;
    const double angular_area = kernel_detail::sphere_area(dim - 1);

    // Spatial integral of Y(|x - y|, age) over the support shell. The angle
    // integral runs in the distance variable d = |x - y|,
    //   int_0^pi h(cos) sin^(N-2) dtheta
    //     = int_{|r-rho|}^{r+rho} h(d) (1 - c(d)^2)^((N-3)/2) d/(r rho) dd,
    // which removes the contact singularity from the mesh's point of view.
    auto shell_average = [&](double age) {
        auto radial = [&](double rho_y) {
            const double d_lo = std::abs(r - rho_y), d_hi = r + rho_y;
            auto by_distance = [&](double d) {
                const double c = (r * r + rho_y * rho_y - d * d) / (2.0 * r * rho_y);
                const double s2 = std::max(0.0, 1.0 - c * c);
                return eval_Y(profile, d, age) *
                       std::pow(s2, 0.5 * (dim - 3.0)) * d / (r * rho_y);
            };
            auto mesh = graded_mesh(d_lo, d_hi, opts.angular_panels, opts.spatial_grading);
            return composite_gauss8(by_distance, mesh) * std::pow(rho_y, dim - 1.0);
        };
        double total = 0.0;
        if (r < 1e-12) { // center point: every y in the shell has |x-y| = rho_y
            auto center = [&](double rho_y) {
                return eval_Y(profile, rho_y, age) * std::pow(rho_y, dim - 1.0);
            };
            const double angular_full = std::sqrt(kernel_detail::kPi) *
                                        std::exp(log_gamma(0.5 * (dim - 1.0)) -
                                                 log_gamma(0.5 * dim));
            auto mesh = graded_mesh(std::max(lo, 1e-12), hi, opts.radial_panels,
                                    opts.spatial_grading);
            return angular_area * angular_full * composite_gauss8(center, mesh);
        }
        if (r > lo && r < hi) { // split the radial mesh at the contact radius
            auto left = graded_mesh(r, std::max(lo, 1e-12), opts.radial_panels / 2 + 2,
                                    opts.spatial_grading);
            std::reverse(left.begin(), left.end());
            total += composite_gauss8(radial, left);
            auto right = graded_mesh(r, hi, opts.radial_panels / 2 + 2, opts.spatial_grading);
            total += composite_gauss8(radial, right);
        } else {
            auto mesh = graded_mesh(std::max(lo, 1e-12), hi, opts.radial_panels, 1.0);
            total += composite_gauss8(radial, mesh);
        }
        return angular_area * total;
    };

    auto time_integrand = [&](double age) {
        return std::pow(1.0 + (t - age), -forcing.gamma()) * shell_average(age);
    };
    auto age_mesh = graded_mesh(0.0, t, opts.time_panels, opts.time_grading);
    return composite_gauss8(time_integrand, age_mesh);
}

/// Young-type upper bound for the L1 norm of u(.,t):
///   int_0^t ||Y(.,t-s)||_1 ||f(.,s)||_1 ds, with the kernel mass in closed form.
inline double young_l1_bound(const ProblemParams& params, const Forcing& forcing, double t) {
    const double alpha = params.alpha;
    const double mass = forcing.spatial_mass(params.dim);
    auto integrand = [&](double w) { // w = (t-s)^alpha
        const double s = t - std::pow(w, 1.0 / alpha);
        return std::pow(1.0 + std::max(s, 0.0), -forcing.gamma());
    };
    const double inv_gamma_alpha = std::exp(-log_gamma(alpha));
    return mass * inv_gamma_alpha / alpha *
           adaptive_gk(integrand, 0.0, std::pow(t, alpha), 1e-10).value;
}

/// L1-scheme residual of the Fourier-mode Volterra equation
///   d_t^alpha v + rho^{2 beta} v = (1+t)^(-gamma),  v = duhamel_hat / hat_spatial,
/// on the graded mesh t_k = T (k/M)^(2/alpha).
struct CaputoResidualProfile {
    std::vector<double> nodes;
    std::vector<double> residuals;
    double max_all = 0.0;      ///< includes the first graded nodes
    double max_interior = 0.0; ///< over t >= T/100, the order-bearing region
};

struct CaputoResidualReport {
    CaputoResidualProfile coarse; ///< mesh size M
    CaputoResidualProfile fine;   ///< mesh size 2M
    double contraction_interior = 0.0; ///< fine.max_interior / coarse.max_interior
};

inline CaputoResidualProfile caputo_residual_profile(const ProblemParams& params,
                                                     const Forcing& forcing, double rho,
                                                     double t_end, int mesh_points,
                                                     const MlfAccuracy& mlf = {}) {
    if (!(rho > 0.0)) throw DomainError("caputo_residual_profile: requires rho > 0");
    if (mesh_points < 8) throw DomainError("caputo_residual_profile: mesh too small");
    const double alpha = params.alpha;
    const double lambda = std::pow(rho, 2.0 * params.beta);
    const double grading = 2.0 / alpha;

    CaputoResidualProfile prof;
    prof.nodes.resize(mesh_points);
    std::vector<double> v(mesh_points + 1, 0.0); // v[0] = 0 (zero initial datum)
    for (int k = 1; k <= mesh_points; ++k) {
        const double tk = t_end * std::pow(double(k) / mesh_points, grading);
        prof.nodes[k - 1] = tk;
        v[k] = duhamel_hat(params, forcing, rho, tk, 1e-10, mlf);
    }
    prof.residuals.resize(mesh_points);
    const double inv_g2a = std::exp(-log_gamma(2.0 - alpha));
    for (int n = 1; n <= mesh_points; ++n) {
        const double tn = prof.nodes[n - 1];
        double caputo = 0.0;
        double t_prev = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double tk = prof.nodes[k - 1];
            const double left = std::pow(tn - t_prev, 1.0 - alpha);
            const double right = (k == n) ? 0.0 : std::pow(tn - tk, 1.0 - alpha);
            caputo += (v[k] - v[k - 1]) / (tk - t_prev) * (left - right);
            t_prev = tk;
        }
        caputo *= inv_g2a;
        const double residual = caputo + lambda * v[n] - std::pow(1.0 + tn, -forcing.gamma());
        prof.residuals[n - 1] = std::abs(residual);
        prof.max_all = std::max(prof.max_all, prof.residuals[n - 1]);
        if (tn >= 0.01 * t_end)
            prof.max_interior = std::max(prof.max_interior, prof.residuals[n - 1]);
    }
    return prof;
}

/// Residual report at two refinements. The first graded nodes carry an O(1)
/// consistency defect of the L1 scheme for v ~ t^alpha (a fixed 4/pi - 1
/// overshoot at alpha = 1/2), so the order check reads max_interior, the
/// residual away from t = 0.
inline CaputoResidualReport caputo_residual_check(const ProblemParams& params,
                                                  const Forcing& forcing, double rho,
                                                  double t_end, int mesh_points,
                                                  const MlfAccuracy& mlf = {}) {
    CaputoResidualReport rep;
    rep.coarse = caputo_residual_profile(params, forcing, rho, t_end, mesh_points, mlf);
    rep.fine = caputo_residual_profile(params, forcing, rho, t_end, 2 * mesh_points, mlf);
    rep.contraction_interior =
        rep.fine.max_interior / std::max(rep.coarse.max_interior, 1e-300);
    return rep;
}

/// Slice CSV: one metadata header line, then "r,u,acc" rows.
inline void write_slice_csv(const RadialSolutionSlice& slice, const ProblemParams& params,
                            const Forcing& forcing, std::ostream& os) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "# alpha=%.17g beta=%.17g dim=%d gamma=%.17g spatial=%s t=%.17g\n",
                  params.alpha, params.beta, params.dim, forcing.gamma(),
                  forcing.descriptor().c_str(), slice.t);
    os << buf << "r,u,acc\n";
    for (std::size_t i = 0; i < slice.radii.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.3g\n", slice.radii[i], slice.values[i],
                      slice.accuracy[i]);
        os << buf;
    }
}

} // namespace fracheat
