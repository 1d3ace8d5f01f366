#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kgdecay/detail/grid_ops.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/solver.hpp"

namespace kgdecay {

// Radial integrals of 3D densities are 4 pi int f(r) r^2 dr. In w-variables
// r^2 |u_t|^2 = v^2, r^2 |grad u|^2 = (w' - w/r)^2, r^2 u^2 = w^2 and
// r^2 u^6 = w^6 / r^4; all of these vanish at the origin.

namespace detail {

struct Densities {
    std::vector<double> kinetic, gradient, mass, quintic;
};

inline Densities densities(const RadialState& st, const CutoffPair& cut) {
    const std::size_t n = st.w.size();
    const auto dw = radial_derivative(st.w, st.grid.dr);
    Densities d;
    d.kinetic.assign(n, 0.0);
    d.gradient.assign(n, 0.0);
    d.mass.assign(n, 0.0);
    d.quintic.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        const double w = st.w[i];
        const double g = dw[i] - w / r;
        d.kinetic[i] = 0.5 * st.v[i] * st.v[i];
        d.gradient[i] = 0.5 * g * g;
        d.mass[i] = 0.5 * cut.chi1[i] * w * w;
        const double w2 = w * w;
        d.quintic[i] = cut.quintic[i] * w2 * w2 * w2 / 6.0;
    }
    return d;
}

inline std::vector<double> energy_density(const RadialState& st, const CutoffPair& cut) {
    auto d = densities(st, cut);
    for (std::size_t i = 0; i < d.kinetic.size(); ++i)
        d.kinetic[i] = four_pi * (d.kinetic[i] + d.gradient[i] + d.mass[i] + d.quintic[i]);
    return d.kinetic;
}

}  // namespace detail

/// Conserved energy of the continuous problem evaluated by quadrature.
inline double global_energy(const RadialState& st, const CutoffPair& cut) {
    return detail::integrate(detail::energy_density(st, cut), st.grid.dr);
}

/// Energy inside the ball B_rho, using the ball-local gradient integrand.
inline double local_energy(const RadialState& st, const CutoffPair& cut, double rho) {
    return detail::integrate_to(detail::energy_density(st, cut), st.grid.dr, rho);
}

/// 4 pi int chi2 w^6 / r^4 dr.
inline double chi2_u6_integral(const RadialState& st, const CutoffPair& cut) {
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double w2 = st.w[i] * st.w[i];
        f[i] = detail::four_pi * cut.quintic[i] * w2 * w2 * w2;
    }
    return detail::integrate(f, st.grid.dr);
}

/// Same integral restricted to B_rho.
inline double chi2_u6_ball(const RadialState& st, const CutoffPair& cut, double rho) {
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double w2 = st.w[i] * st.w[i];
        f[i] = detail::four_pi * cut.quintic[i] * w2 * w2 * w2;
    }
    return detail::integrate_to(f, st.grid.dr, rho);
}

/// Energy of a state over the ball of radius equal to its own time.
inline double cone_energy_of(const RadialState& st, const CutoffPair& cut) {
    if (st.t <= 0.0) return 0.0;
    return local_energy(st, cut, st.t);
}

/// Energy in B_t at time t, interpolating linearly between snapshots.
inline double cone_energy(const Trajectory& tr, double t, const CutoffPair& cut) {
    if (t <= 0.0) return 0.0;
    const long i = tr.find(t);
    if (i >= 0) return cone_energy_of(tr.states[static_cast<std::size_t>(i)], cut);
    if (tr.times.empty() || t < tr.times.front() || t > tr.times.back())
        throw Error(ErrorKind::NoSnapshot, "no snapshot brackets t=" + std::to_string(t));
    return local_energy(tr.interpolate(t), cut, t);
}

struct ConeWindow {
    double a = 0.0;
    double b = 0.0;

    void validate(double R) const {
        if (!(b > a && a > R)) throw Error(ErrorKind::InvalidArgument, "cone window needs b > a > R");
    }
};

namespace detail {

// Indices of trace samples covering [a, b]; throws TraceIncomplete.
inline std::pair<std::size_t, std::size_t> trace_range(const Trajectory& tr, double a, double b) {
    const double tol = 1e-9 * std::max(1.0, b);
    if (tr.trace_t.empty() || tr.trace_t.front() > a + tol || tr.trace_end() < b - tol)
        throw Error(ErrorKind::TraceIncomplete, "diagonal trace does not cover the window");
    auto lo = static_cast<std::size_t>(std::lower_bound(tr.trace_t.begin(), tr.trace_t.end(), a - tol) -
                                       tr.trace_t.begin());
    auto hi = static_cast<std::size_t>(std::upper_bound(tr.trace_t.begin(), tr.trace_t.end(), b + tol) -
                                       tr.trace_t.begin());
    return {lo, hi};
}

// Trapezoid in t of f(i) over trace samples in [lo, hi).
template <class F>
double trace_integral(const Trajectory& tr, std::size_t lo, std::size_t hi, F&& f) {
    double acc = 0.0;
    for (std::size_t i = lo + 1; i < hi; ++i)
        acc += 0.5 * (f(i) + f(i - 1)) * (tr.trace_t[i] - tr.trace_t[i - 1]);
    return acc;
}

inline double trace_chi(const std::vector<double>& chi, const RadialGrid& g, double r) {
    return sample(chi, g.dr, r);
}

}  // namespace detail

enum class FluxVariant { radial, shifted };

/// Energy flux through the mantle r = t, a <= t <= b. `radial` pairs the
/// velocity with the outward normal; `shifted` scales it by t/(t+1).
inline double mantle_flux(const Trajectory& tr, const ConeWindow& win, const CutoffPair& cut,
                          FluxVariant variant = FluxVariant::radial) {
    auto [lo, hi] = detail::trace_range(tr, win.a, win.b);
    const RadialGrid& g = tr.grid;
    auto f = [&](std::size_t i) {
        const double t = tr.trace_t[i];
        if (t <= 0.0) return 0.0;
        const double w = tr.trace_w[i];
        const double factor = variant == FluxVariant::radial ? 1.0 : t / (t + 1.0);
        const double m = factor * tr.trace_v[i] + tr.trace_dw[i] - w / t;
        const double c1 = detail::trace_chi(cut.chi1, g, t);
        const double c2 = detail::trace_chi(cut.chi2, g, t);
        const double w2 = w * w;
        return detail::four_pi * (0.5 * m * m + 0.5 * c1 * w2 + c2 * w2 * w2 * w2 / (6.0 * t * t * t * t));
    };
    return detail::trace_integral(tr, lo, hi, f);
}

/// Multiplier functional H of a single state at time t = st.t over B_t.
inline double H_of(const RadialState& st, const CutoffPair& cut) {
    const double t = st.t;
    if (!(t > 0.0)) throw Error(ErrorKind::NonpositiveTime, "H needs t > 0");
    const auto dw = detail::radial_derivative(st.w, st.grid.dr);
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        if (r > t + st.grid.dr) break;
        const double w = st.w[i], v = st.v[i];
        const double g = dw[i] - w / r;
        const double lu = r * dw[i] - t * v;
        const double w2 = w * w;
        const double inner = lu * lu / (2.0 * t * t) +
                             0.5 * ((1.0 - r * r / (t * t)) * g * g + cut.chi1[i] * w2) +
                             cut.quintic[i] * w2 * w2 * w2 / 6.0;
        f[i] = detail::four_pi * (t * inner + w2 / t);
    }
    return detail::integrate_to(f, st.grid.dr, t);
}

inline double H_functional(const Trajectory& tr, double t, const CutoffPair& cut) {
    if (!(t > 0.0)) throw Error(ErrorKind::NonpositiveTime, "H needs t > 0");
    return H_of(tr.at(t), cut);
}

/// [int_{B_a} chi2 u(a)^6] / [(b/a)(e(b) + e(b)^{1/3})].
inline double cone_bound_ratio(const Trajectory& tr, const ConeWindow& win, const CutoffPair& cut) {
    const double num = chi2_u6_ball(tr.interpolate(win.a), cut, win.a);
    const double eb = cone_energy(tr, win.b, cut);
    if (eb <= 0.0) {
        if (num == 0.0) return 0.0;
        throw Error(ErrorKind::DegenerateDenominator, "cone energy vanishes at b");
    }
    return num / ((win.b / win.a) * (eb + std::cbrt(eb)));
}

struct PohozaevTerms {
    double I = 0.0, II = 0.0, III = 0.0, IV = 0.0, V = 0.0;
    double residual = 0.0;
};

namespace detail {

// Space integral of the time component of the multiplier current at time t.
inline double pohozaev_slice(const RadialState& st, const CutoffPair& cut) {
    const double t = st.t;
    const auto dw = radial_derivative(st.w, st.grid.dr);
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        if (r > t + st.grid.dr) break;
        const double w = st.w[i], v = st.v[i];
        const double g = dw[i] - w / r;
        const double w2 = w * w;
        const double q = 0.5 * (g * g + v * v + cut.chi1[i] * w2) + cut.quintic[i] * w2 * w2 * w2 / 6.0;
        f[i] = four_pi * (-t * q + r * v * g + v * w);
    }
    return integrate_to(f, st.grid.dr, t);
}

inline double bulk_slice(const RadialState& st, const CutoffPair& cut, bool cutoff_term) {
    const double t = st.t;
    const auto dw = radial_derivative(st.w, st.grid.dr);
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        if (r > t + st.grid.dr) break;
        const double w = st.w[i];
        if (cutoff_term) {
            const double w2 = w * w;
            const double r4 = r * r * r * r;
            f[i] = four_pi * (((2.0 / 3.0) * cut.chi2[i] - (1.0 / 6.0) * r * cut.dchi2[i]) * w2 * w2 * w2 / r4 -
                              0.5 * r * cut.dchi1[i] * w2);
        } else {
            const double g = dw[i] - w / r;
            f[i] = four_pi * (st.v[i] * st.v[i] + g * g);
        }
    }
    return integrate_to(f, st.grid.dr, t);
}

}  // namespace detail

/// Terms of the multiplier identity over the truncated cone a <= t <= b.
/// Snapshots must be at most 0.05 apart over [a, b].
inline PohozaevTerms pohozaev_balance(const Trajectory& tr, const ConeWindow& win, const CutoffPair& cut) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double t = tr.times[i];
        if (t >= win.a - 1e-9 && t <= win.b + 1e-9) idx.push_back(i);
    }
    if (idx.size() < 2 || std::abs(tr.times[idx.front()] - win.a) > 1e-9 ||
        std::abs(tr.times[idx.back()] - win.b) > 1e-9)
        throw Error(ErrorKind::SnapshotsTooSparse, "window end points are not stored");
    for (std::size_t k = 1; k < idx.size(); ++k)
        if (tr.times[idx[k]] - tr.times[idx[k - 1]] > 0.05 + 1e-12)
            throw Error(ErrorKind::SnapshotsTooSparse, "snapshot stride above 0.05");
    auto [lo, hi] = detail::trace_range(tr, win.a, win.b);

    PohozaevTerms p;
    p.I = detail::pohozaev_slice(tr.states[idx.back()], cut);
    p.II = -detail::pohozaev_slice(tr.states[idx.front()], cut);

    const RadialGrid& g = tr.grid;
    p.III = detail::trace_integral(tr, lo, hi, [&](std::size_t i) {
        const double t = tr.trace_t[i];
        if (t <= 0.0) return 0.0;
        const double w = tr.trace_w[i];
        const double w2 = w * w;
        const double c1 = detail::trace_chi(cut.chi1, g, t);
        const double c2 = detail::trace_chi(cut.chi2, g, t);
        const double m = tr.trace_v[i] + tr.trace_dw[i] - w / t;
        return detail::four_pi * (t * c1 * w2 + c2 * w2 * w2 * w2 / (3.0 * t * t * t) - w * m);
    });

    std::vector<double> ts, iv, vv;
    for (std::size_t k : idx) {
        ts.push_back(tr.times[k]);
        iv.push_back(detail::bulk_slice(tr.states[k], cut, false));
        vv.push_back(detail::bulk_slice(tr.states[k], cut, true));
    }
    p.IV = detail::trapezoid(ts, iv);
    p.V = detail::trapezoid(ts, vv);
    p.residual = p.I + p.II + p.III + p.IV + p.V;
    return p;
}

/// Scalar diagnostics of one state.
struct EnergyReport {
    double t = 0.0;
    double E = 0.0;
    double E_R = 0.0;
    double e_cone = 0.0;
    double H = 0.0;
    double chi2_u6 = 0.0;
    std::map<double, double> norms_rho;
};

inline EnergyReport energy_report(const RadialState& st, const CutoffPair& cut, double r_obs,
                                  const std::vector<double>& radii = {}) {
    EnergyReport rep;
    rep.t = st.t;
    const auto dens = detail::energy_density(st, cut);
    rep.E = detail::integrate(dens, st.grid.dr);
    rep.E_R = detail::integrate_to(dens, st.grid.dr, r_obs);
    rep.e_cone = st.t > 0.0 ? detail::integrate_to(dens, st.grid.dr, st.t) : 0.0;
    rep.H = st.t > 0.0 ? H_of(st, cut) : 0.0;
    rep.chi2_u6 = chi2_u6_integral(st, cut);
    for (double rho : radii) {
        const double n = restricted_norm(st, rho);
        rep.norms_rho[rho] = n * n;
    }
    return rep;
}

}  // namespace kgdecay
