#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "fracheat/errors.hpp"

namespace fracheat {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    long evals = 0;
};

namespace quad_detail {

// Gauss-Kronrod 7-15 pair, the QUADPACK dqk15 constants.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(F&& f, double a, double b, double* result, double* error) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    double fv[15];
    double resk = 0.0, resg = 0.0, resabs = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double dx = hl * kXgk[i];
        fv[i] = f(c - dx);
        fv[14 - i] = f(c + dx);
    }
    fv[7] = f(c);
    for (int i = 0; i < 7; ++i) {
        const double sum = fv[i] + fv[14 - i];
        resk += kWgk[i] * sum;
        resabs += kWgk[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
        if (i % 2 == 1) resg += kWg[(i - 1) / 2] * sum;
    }
    resk += kWgk[7] * fv[7];
    resabs += kWgk[7] * std::abs(fv[7]);
    resg += kWg[3] * fv[7];

    const double reskh = 0.5 * resk;
    double resasc = kWgk[7] * std::abs(fv[7] - reskh);
    for (int i = 0; i < 7; ++i)
        resasc += kWgk[i] * (std::abs(fv[i] - reskh) + std::abs(fv[14 - i] - reskh));
    resasc *= hl;

    *result = resk * hl;
    double err = std::abs((resk - resg) * hl);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs * std::abs(hl);
    *error = std::max(err, round);
}

struct Segment {
    double err, a, b, value;
    bool operator<(const Segment& o) const { return err < o.err; }
};

} // namespace quad_detail

/// Globally adaptive Gauss-Kronrod 7-15 quadrature on a finite interval.
/// Stops when the accumulated error estimate meets max(rel_tol*|I|, abs_tol)
/// or the interval budget runs out (the error estimate is then honest).
template <class F>
QuadResult adaptive_gk(F&& f, double a, double b, double rel_tol = 1e-10,
                       double abs_tol = 0.0, int max_intervals = 4000) {
    QuadResult out;
    if (a == b) return out;
    std::priority_queue<quad_detail::Segment> heap;
    double value, err;
    quad_detail::gk15(f, a, b, &value, &err);
    out.evals = 15;
    heap.push({err, a, b, value});
    double total = value, total_err = err;
    int used = 1;
    while (used < max_intervals) {
        if (total_err <= std::max(rel_tol * std::abs(total), abs_tol)) break;
        quad_detail::Segment top = heap.top();
        if (top.err <= 1e-3 * std::max(rel_tol * std::abs(total), abs_tol) / std::max(1, used))
            break; // nothing left worth splitting
        heap.pop();
        const double mid = 0.5 * (top.a + top.b);
        if (mid <= top.a || mid >= top.b) { heap.push({0.0, top.a, top.b, top.value}); break; }
        double v1, e1, v2, e2;
        quad_detail::gk15(f, top.a, mid, &v1, &e1);
        quad_detail::gk15(f, mid, top.b, &v2, &e2);
        out.evals += 30;
        total += v1 + v2 - top.value;
        total_err += e1 + e2 - top.err;
        heap.push({e1, top.a, mid, v1});
        heap.push({e2, mid, top.b, v2});
        ++used;
    }
    out.value = total;
    out.abs_error = std::max(total_err, 0.0);
    return out;
}

/// Adaptive quadrature with caller-provided interior breakpoints (sorted or
/// not); each cell gets its own adaptive pass.
template <class F>
QuadResult adaptive_gk_split(F&& f, double a, double b, std::vector<double> breaks,
                             double rel_tol = 1e-10, double abs_tol = 0.0,
                             int max_intervals_per_cell = 1200) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    QuadResult out;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = breaks[i], hi = breaks[i + 1];
        if (hi <= a || lo >= b) continue;
        auto r = adaptive_gk(f, std::max(lo, a), std::min(hi, b), rel_tol,
                             abs_tol / std::max<std::size_t>(1, breaks.size() - 1),
                             max_intervals_per_cell);
        out.value += r.value;
        out.abs_error += r.abs_error;
        out.evals += r.evals;
    }
    return out;
}

namespace quad_detail {
// 8-point Gauss-Legendre, used by the deliberately plain composite rules.
inline constexpr double kGl8X[4] = {
    0.183434642495649804939476142360184, 0.525532409916328985817739049189246,
    0.796666477413626739591553936475830, 0.960289856497536231683560868569473};
inline constexpr double kGl8W[4] = {
    0.362683783378361982965150449277196, 0.313706645877887287337962201986601,
    0.222381034453374470544355994426241, 0.101228536290376259152531354309962};
} // namespace quad_detail

/// Fixed 8-point Gauss-Legendre on [a,b]; no adaptivity by design.
template <class F>
double gauss8(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double dx = hl * quad_detail::kGl8X[i];
        s += quad_detail::kGl8W[i] * (f(c - dx) + f(c + dx));
    }
    return s * hl;
}

/// Mesh of n+1 points on [a,b], graded toward `a` with the given power:
/// node_j = a + (b-a) * (j/n)^power.
inline std::vector<double> graded_mesh(double a, double b, int n, double power) {
    std::vector<double> nodes(n + 1);
    for (int j = 0; j <= n; ++j)
        nodes[j] = a + (b - a) * std::pow(double(j) / n, power);
    nodes.front() = a;
    nodes.back() = b;
    return nodes;
}

/// Composite 8-point Gauss over an explicit mesh.
template <class F>
double composite_gauss8(F&& f, const std::vector<double>& mesh) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) s += gauss8(f, mesh[i], mesh[i + 1]);
    return s;
}

} // namespace fracheat
