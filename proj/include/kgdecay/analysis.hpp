#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kgdecay/detail/grid_ops.hpp"
#include "kgdecay/energy.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/laxphillips.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/profile.hpp"
#include "kgdecay/solver.hpp"

namespace kgdecay {

enum class DecayModel { exponential, polynomial };

inline const char* to_string(DecayModel m) { return m == DecayModel::exponential ? "exponential" : "polynomial"; }

/// value ~ C exp(-rate t) or value ~ C t^(-rate).
struct DecayFit {
    DecayModel model = DecayModel::exponential;
    double C = 0.0;
    double rate = 0.0;
    double t0 = 0.0, t1 = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
    int n_dropped = 0;
};

/// Least squares on the log of the series inside [t0, t1]. Values at or below
/// 1e-30 of the window maximum are dropped and counted.
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, DecayModel model, double t0,
                          double t1) {
    if (!(t1 > t0)) throw Error(ErrorKind::InvalidArgument, "fit window needs t1 > t0");
    DecayFit fit;
    fit.model = model;
    fit.t0 = t0;
    fit.t1 = t1;
    double vmax = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - 1e-12 && t[i] <= t1 + 1e-12) vmax = std::max(vmax, value[i]);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12) continue;
        if (!(value[i] > 1e-30 * vmax)) {
            ++fit.n_dropped;
            continue;
        }
        if (model == DecayModel::polynomial && !(t[i] > 0.0)) {
            ++fit.n_dropped;
            continue;
        }
        xs.push_back(model == DecayModel::exponential ? t[i] : std::log(t[i]));
        ys.push_back(std::log(value[i]));
    }
    fit.n_points = static_cast<int>(xs.size());
    if (fit.n_points < 5) throw Error(ErrorKind::TooFewPoints, std::to_string(fit.n_points) + " usable points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (syy <= 1e-300 * std::max(1.0, my * my)) throw Error(ErrorKind::DegenerateSeries, "series is constant");
    const double slope = sxy / sxx;
    const double icpt = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (icpt + slope * xs[i]);
        ssr += e * e;
    }
    fit.rate = -slope;
    fit.C = std::exp(icpt);
    fit.r_squared = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
    return fit;
}

/// Smallest C with value(t) <= C * model(t) * scale at every sample.
inline double envelope_constant(const std::vector<double>& t, const std::vector<double>& value, const DecayFit& fit,
                                double scale = 1.0) {
    double C = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double m = fit.model == DecayModel::exponential ? std::exp(-fit.rate * t[i])
                                                              : std::pow(t[i], -fit.rate);
        if (m > 0.0 && std::isfinite(m)) C = std::max(C, value[i] / (m * scale));
    }
    return C;
}

struct Theorem1Verdict {
    double alpha = 0.0;
    double C = 0.0;
    double r2 = 0.0;
    double t0 = 0.0, t1 = 0.0;
    double max_envelope_ratio = 0.0;
    bool envelope_ok = false;
    bool degenerate_fast = false;
    bool pass = false;
};

/// Regression rate on [t0, t1] with the envelope constant over all samples.
/// When the series drops below 1e-30 of its peak too early to fit, the decay
/// is flagged as faster than exponential.
inline Theorem1Verdict theorem1_verdict(const std::vector<double>& t, const std::vector<double>& E_R, double E0,
                                        double t0 = 5.0, double t1 = 30.0) {
    Theorem1Verdict v;
    v.t0 = t0;
    v.t1 = t1;
    const double peak = *std::max_element(E_R.begin(), E_R.end());
    double tail = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 - 1e-12) tail = std::max(tail, E_R[i]);
    if (tail <= 1e-30 * peak) {
        v.degenerate_fast = v.envelope_ok = v.pass = true;
        v.alpha = std::numeric_limits<double>::infinity();
        return v;
    }
    try {
        const DecayFit fit = fit_decay(t, E_R, DecayModel::exponential, t0, t1);
        v.alpha = fit.rate;
        v.r2 = fit.r_squared;
        v.C = envelope_constant(t, E_R, fit, E0);
        double worst = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i)
            worst = std::max(worst, E_R[i] / (v.C * std::exp(-v.alpha * t[i]) * E0));
        v.max_envelope_ratio = worst;
        v.envelope_ok = worst <= 1.0 + 1e-12;
        v.pass = v.alpha > 0.0 && v.r2 >= 0.9 && v.envelope_ok;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::TooFewPoints) throw;
        v.degenerate_fast = tail <= 1e-30 * std::max(peak, 1e-300) || tail == 0.0;
        v.envelope_ok = v.degenerate_fast;
        v.pass = v.degenerate_fast;
        v.alpha = std::numeric_limits<double>::infinity();
    }
    return v;
}

/// Energy-norm distance between a nonlinear trajectory at time t and the
/// Duhamel representation U_L(t) psi + int_0^t U_L(t-s) (0, -chi2 u^5(s)) ds,
/// relative to |psi|. U_L keeps chi1 and drops chi2 and runs with the
/// trajectory's own step; the s-integral is a trapezoid over snapshots.
inline double duhamel_residual(const Trajectory& tr, const CutoffPair& cut, const SchemeConfig& cfg, double t) {
    const double t_start = tr.t_begin();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        if (tr.times[i] <= t + 1e-9) idx.push_back(i);
    if (idx.size() < 2 || std::abs(tr.times[idx.back()] - t) > 1e-9)
        throw Error(ErrorKind::SnapshotsTooSparse, "no snapshot at the evaluation time");
    for (std::size_t k = 1; k < idx.size(); ++k)
        if (tr.times[idx[k]] - tr.times[idx[k - 1]] > 0.05 + 1e-12)
            throw Error(ErrorKind::SnapshotsTooSparse, "snapshot stride above 0.05");
    const CutoffPair lin = cut.without_quintic();
    const RadialState& psi = tr.states.front();
    const double dt = tr.dt;

    std::vector<RadialState> slices(idx.size());
    parallel_for(static_cast<int>(idx.size()), [&](int k) {
        const RadialState& s = tr.states[idx[static_cast<std::size_t>(k)]];
        RadialState src(s.grid, s.t);
        for (std::size_t i = 1; i < s.w.size(); ++i) {
            const double w = s.w[i];
            src.v[i] = -cut.quintic[i] * w * w * w * w * w;
        }
        slices[static_cast<std::size_t>(k)] = kg_group_apply(src, t - s.t, lin, cfg, dt);
    });
    RadialState acc = kg_group_apply(psi, t - t_start, lin, cfg, dt);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        double wgt = 0.0;
        if (k > 0) wgt += 0.5 * (tr.times[idx[k]] - tr.times[idx[k - 1]]);
        if (k + 1 < idx.size()) wgt += 0.5 * (tr.times[idx[k + 1]] - tr.times[idx[k]]);
        acc += wgt * slices[k];
    }
    const double n0 = h_norm(psi);
    if (n0 == 0.0) return 0.0;
    return h_norm(acc - tr.states[idx.back()]) / n0;
}

struct GronwallOptions {
    double epsilon = 1e-2;      ///< smallness level for |chi2^{1/6} u|_{L^6}
    double beta = 0.0;          ///< linear local decay rate (norm level)
    double K_inner = 1.0;       ///< observer cutoff equals 1 on B_{K_inner}
    double K_radius = 2.0;      ///< and vanishes beyond K_radius
    double window = 1.0;        ///< sliding window for sup norms
    double rate_margin = 0.0;   ///< slack in fitted_rate <= -beta/2 + margin
};

struct GronwallReport {
    bool threshold_reached = false;
    double T_threshold = 0.0;
    double epsilon = 0.0;         ///< measured sup of |chi2^{1/6} u|_{L^6} after the threshold
    double epsilon_min = 0.0;     ///< smallest tail sup seen (when never reached)
    double beta = 0.0;
    std::vector<double> tau, f_series, g_series, source_series;
    double C_fit = 0.0;
    double max_violation = 0.0;   ///< max of (f - g - C Q) / f over samples
    double fitted_rate = 0.0;
    double r_squared = 0.0;
    bool rate_ok = false;
    double max_increase = 0.0;    ///< max of f(tau+1) - f(tau)
};

namespace detail {

inline RadialState apply_window(const RadialState& st, double inner, double outer) {
    RadialState out = st;
    for (std::size_t i = 0; i < st.w.size(); ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        const double k = smooth_step_down((r - inner) / (outer - inner));
        out.w[i] *= k;
        out.v[i] *= k;
    }
    return out;
}

inline double quintic_l2(const RadialState& st, const CutoffPair& cut) {
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double w = st.w[i];
        const double s = cut.quintic[i] * w * w * w * w * w;
        f[i] = four_pi * s * s;
    }
    return std::sqrt(integrate(f, st.grid.dr));
}

// sup of series over [t_i, t_i + window] for each i whose window fits.
inline std::vector<double> window_sup(const std::vector<double>& t, const std::vector<double>& x, double window,
                                      std::size_t count) {
    std::vector<double> out(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        double m = 0.0;
        for (std::size_t j = i; j < t.size() && t[j] <= t[i] + window + 1e-9; ++j) m = std::max(m, x[j]);
        out[i] = m;
    }
    return out;
}

}  // namespace detail

/// Measures the quantities in the Gronwall closure of the nonlinear decay
/// argument: the smallness time T, f(tau) = sup_window |K u(T+tau)|, the
/// linear counterpart g(tau) from u(T), and the source integral
/// Q(tau) = int_0^{tau+window} e^{-beta max(tau-s, 0)} |chi2 u^5(T+s)|_{L^2} ds.
/// C_fit is the least C with f <= g + C Q at every sample.
inline GronwallReport gronwall_chain(const Trajectory& tr, const CutoffPair& cut, const SchemeConfig& cfg,
                                     const GronwallOptions& opt) {
    GronwallReport rep;
    rep.beta = opt.beta;
    const std::size_t n = tr.times.size();
    std::vector<double> eps(n);
    for (std::size_t i = 0; i < n; ++i) eps[i] = std::pow(chi2_u6_integral(tr.states[i], cut), 1.0 / 6.0);
    std::vector<double> tail(n);
    double run = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        run = std::max(run, eps[i]);
        tail[i] = run;
    }
    rep.epsilon_min = *std::min_element(tail.begin(), tail.end());
    std::size_t i0 = n;
    for (std::size_t i = 0; i < n; ++i)
        if (tail[i] <= opt.epsilon) {
            i0 = i;
            break;
        }
    if (i0 == n) return rep;
    rep.threshold_reached = true;
    rep.T_threshold = tr.times[i0];
    rep.epsilon = tail[i0];

    std::vector<double> ts(tr.times.begin() + static_cast<long>(i0), tr.times.end());
    for (double& s : ts) s -= rep.T_threshold;
    const double span = ts.back();
    if (span < 2.0 * opt.window) throw Error(ErrorKind::InvalidArgument, "run too short after the threshold");

    std::vector<double> a(ts.size()), h(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const RadialState& s = tr.states[i0 + k];
        a[k] = h_norm(detail::apply_window(s, opt.K_inner, opt.K_radius));
        h[k] = detail::quintic_l2(s, cut);
    }
    const CutoffPair lin = cut.without_quintic();
    EvolveOptions eo;
    eo.dt = tr.dt;
    eo.record_trace = false;
    eo.record_energy = false;
    const Trajectory linear = evolve(tr.states[i0], lin, cfg, span, {}, tr.stride, eo);
    std::vector<double> b(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k)
        b[k] = h_norm(detail::apply_window(linear.states[k], opt.K_inner, opt.K_radius));

    std::size_t count = 0;
    while (count < ts.size() && ts[count] + opt.window <= span + 1e-9) ++count;
    rep.tau.assign(ts.begin(), ts.begin() + static_cast<long>(count));
    rep.f_series = detail::window_sup(ts, a, opt.window, count);
    rep.g_series = detail::window_sup(ts, b, opt.window, count);
    rep.source_series.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j < ts.size() && ts[j] <= ts[k] + opt.window + 1e-9; ++j) {
            xs.push_back(ts[j]);
            ys.push_back(std::exp(-opt.beta * std::max(ts[k] - ts[j], 0.0)) * h[j]);
        }
        rep.source_series[k] = detail::trapezoid(xs, ys);
    }
    for (std::size_t k = 0; k < count; ++k) {
        const double gap = rep.f_series[k] - rep.g_series[k];
        if (gap > 0.0 && rep.source_series[k] > 0.0) rep.C_fit = std::max(rep.C_fit, gap / rep.source_series[k]);
    }
    for (std::size_t k = 0; k < count; ++k) {
        const double f = rep.f_series[k];
        if (f <= 0.0) continue;
        rep.max_violation =
            std::max(rep.max_violation, (f - rep.g_series[k] - rep.C_fit * rep.source_series[k]) / f);
    }
    const double step = tr.stride > 0.0 ? tr.stride : opt.window;
    const auto lag = static_cast<std::size_t>(std::llround(opt.window / step));
    for (std::size_t k = 0; k + lag < count; ++k)
        rep.max_increase = std::max(rep.max_increase, rep.f_series[k + lag] - rep.f_series[k]);

    if (*std::max_element(rep.f_series.begin(), rep.f_series.end()) == 0.0) {
        // nothing left to decay
        rep.rate_ok = true;
        return rep;
    }
    const DecayFit fit = fit_decay(rep.tau, rep.f_series, DecayModel::exponential, rep.tau.front(), rep.tau.back());
    rep.fitted_rate = -fit.rate;
    rep.r_squared = fit.r_squared;
    rep.rate_ok = rep.fitted_rate <= -0.5 * opt.beta + opt.rate_margin;
    return rep;
}

}  // namespace kgdecay
