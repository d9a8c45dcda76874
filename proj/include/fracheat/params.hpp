#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "fracheat/errors.hpp"
#include "fracheat/rational.hpp"

namespace fracheat {

/// Lebesgue exponent p in [1, inf]. Keeps an exact rational alongside the
/// double whenever the input had one, so regime boundaries (p = p_c, p = p_*)
/// classify exactly instead of through floating-point noise.
class LpExponent {
public:
    LpExponent() = default;

    static LpExponent infinity() {
        LpExponent p;
        p.inf_ = true;
        p.value_ = std::numeric_limits<double>::infinity();
        return p;
    }

    static LpExponent finite(double v) {
        if (!(v >= 1.0)) throw DomainError("LpExponent: p must satisfy p >= 1");
        LpExponent p;
        p.value_ = v;
        p.exact_ = Rational::from_double(v);
        return p;
    }

    static LpExponent exact(const Rational& r) {
        if (r < Rational(1)) throw DomainError("LpExponent: p must satisfy p >= 1");
        LpExponent p;
        p.value_ = r.value();
        p.exact_ = r;
        return p;
    }

    /// Accepts "inf", "a/b" or a decimal.
    static LpExponent parse(const std::string& s) {
        if (s == "inf" || s == "Inf" || s == "INF" || s == "infinity") return infinity();
        auto r = Rational::parse(s);
        if (r) return exact(*r);
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos == s.size()) return finite(v);
        } catch (const std::exception&) {}
        throw ConfigError("LpExponent: cannot parse '" + s + "'");
    }

    bool is_inf() const { return inf_; }
    double value() const { return value_; }
    const std::optional<Rational>& exact_value() const { return exact_; }

    /// 1/p, with 1/inf = 0.
    double reciprocal() const { return inf_ ? 0.0 : 1.0 / value_; }

    /// The factor (1 - 1/p) appearing in every rate exponent.
    double holder_factor() const { return 1.0 - reciprocal(); }

    std::string str() const {
        if (inf_) return "inf";
        if (exact_ && exact_->den() != 1) {
            return std::to_string(exact_->num()) + "/" + std::to_string(exact_->den());
        }
        std::ostringstream os;
        os << value_;
        return os.str();
    }

private:
    bool inf_ = false;
    double value_ = 1.0;
    std::optional<Rational> exact_;
};

/// Problem data (alpha, beta, N, gamma) for the memory-heat equation
/// d_t^alpha u + (-Laplace)^beta u = f with forcing decay (1+t)^(-gamma).
/// Only the large-dimension regime N > 4*beta is admitted.
struct ProblemParams {
    double alpha = 0.5; ///< time-derivative order, in (0,1)
    double beta = 1.0;  ///< Laplacian power, in (0,1]
    int dim = 5;        ///< spatial dimension N, N > 4*beta
    double gamma = 0.0; ///< forcing time-decay exponent, any finite real

    ProblemParams(double alpha_, double beta_, int dim_, double gamma_)
        : alpha(alpha_), beta(beta_), dim(dim_), gamma(gamma_) {
        validate();
    }

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ConfigError("ProblemParams: alpha must lie in (0,1), got " + std::to_string(alpha));
        if (!(beta > 0.0 && beta <= 1.0))
            throw ConfigError("ProblemParams: beta must lie in (0,1], got " + std::to_string(beta));
        if (!(dim > 0))
            throw ConfigError("ProblemParams: dim must be a positive integer");
        if (!(static_cast<double>(dim) > 4.0 * beta))
            throw ConfigError("ProblemParams: requires dim > 4*beta, got N=" + std::to_string(dim) +
                              ", beta=" + std::to_string(beta));
        if (!std::isfinite(gamma))
            throw ConfigError("ProblemParams: gamma must be finite");
    }

    /// Exponent of the diffusive space-time scale |x| ~ t^(alpha/(2 beta)).
    double diffusive_exponent() const { return alpha / (2.0 * beta); }

    /// t^(alpha/(2 beta)).
    double diffusive_scale(double t) const { return std::pow(t, diffusive_exponent()); }

    /// Exact beta when the double is dyadic (it usually is: 1, 0.5, 0.75, ...).
    std::optional<Rational> beta_exact() const { return Rational::from_double(beta); }

    ProblemParams with_gamma(double g) const { return ProblemParams(alpha, beta, dim, g); }
};

/// The two critical Lebesgue exponents plus the diffusive scale exponent.
/// Always derived from ProblemParams, never stored independently.
struct CriticalExponents {
    double p_star;              ///< N/(N-4 beta): Y(.,t) lies in L^p iff p < p_star
    double p_c;                 ///< N/(N-2 beta): time-local L^p integrability border
    double diffusive_exponent;  ///< alpha/(2 beta)
    std::optional<Rational> p_star_exact;
    std::optional<Rational> p_c_exact;
};

inline CriticalExponents critical_exponents(const ProblemParams& params) {
    CriticalExponents c{};
    const double n = params.dim;
    c.p_star = n / (n - 4.0 * params.beta);
    c.p_c = n / (n - 2.0 * params.beta);
    c.diffusive_exponent = params.diffusive_exponent();
    if (auto b = params.beta_exact()) {
        Rational n_r(params.dim);
        c.p_star_exact = n_r / (n_r - Rational(4) * (*b));
        c.p_c_exact = n_r / (n_r - Rational(2) * (*b));
    }
    return c;
}

/// q_c(p) = N / (2 beta + N/p), the integrability threshold for the forcing
/// hypothesis at supercritical p. Exact in rational arithmetic when possible,
/// so q_c(p_c) = 1 holds exactly.
inline double q_c(const ProblemParams& params, const LpExponent& p) {
    auto b = params.beta_exact();
    if (b && (p.is_inf() || p.exact_value())) {
        Rational n_r(params.dim);
        Rational n_over_p = p.is_inf() ? Rational(0) : n_r / *p.exact_value();
        return (n_r / (Rational(2) * (*b) + n_over_p)).value();
    }
    const double n = params.dim;
    return n / (2.0 * params.beta + n * p.reciprocal());
}

/// Position of p relative to the critical exponents. Ordered so that the
/// regime is monotone in p.
enum class PRegime {
    Subcritical = 0,      ///< p < p_c
    Critical = 1,         ///< p = p_c
    MidSupercritical = 2, ///< p_c < p < p_star
    PStar = 3,            ///< p = p_star
    AbovePStar = 4,       ///< p > p_star
};

inline const char* to_string(PRegime r) {
    switch (r) {
        case PRegime::Subcritical: return "subcritical";
        case PRegime::Critical: return "critical";
        case PRegime::MidSupercritical: return "mid-supercritical";
        case PRegime::PStar: return "p-star";
        case PRegime::AbovePStar: return "above-p-star";
    }
    return "?";
}

namespace detail {
// -1/0/+1 comparison of p against a critical exponent, exact when both sides
// carry rationals, else within 1e-12 relative.
inline int compare_exponent(const LpExponent& p, double boundary,
                            const std::optional<Rational>& boundary_exact) {
    if (p.is_inf()) return 1; // every critical exponent is finite here
    if (p.exact_value() && boundary_exact) {
        if (*p.exact_value() < *boundary_exact) return -1;
        if (*p.exact_value() == *boundary_exact) return 0;
        return 1;
    }
    double scale = std::max({1.0, std::abs(p.value()), std::abs(boundary)});
    if (std::abs(p.value() - boundary) <= 1e-12 * scale) return 0;
    return p.value() < boundary ? -1 : 1;
}
} // namespace detail

inline PRegime classify_p(const ProblemParams& params, const LpExponent& p) {
    const CriticalExponents c = critical_exponents(params);
    int vs_pc = detail::compare_exponent(p, c.p_c, c.p_c_exact);
    if (vs_pc < 0) return PRegime::Subcritical;
    if (vs_pc == 0) return PRegime::Critical;
    int vs_pstar = detail::compare_exponent(p, c.p_star, c.p_star_exact);
    if (vs_pstar < 0) return PRegime::MidSupercritical;
    if (vs_pstar == 0) return PRegime::PStar;
    return PRegime::AbovePStar;
}

} // namespace fracheat
