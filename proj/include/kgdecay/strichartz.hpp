#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "kgdecay/detail/grid_ops.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/solver.hpp"

namespace kgdecay {

/// L^p(R^3) norm of u = w/r; p = infinity gives the max of |u|.
inline double spatial_norm(const RadialState& st, double p) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
    const std::size_t n = st.w.size();
    const double dr = st.grid.dr;
    if (std::isinf(p)) {
        double m = std::abs(st.w[1] / dr);
        for (std::size_t i = 1; i < n; ++i) m = std::max(m, std::abs(st.w[i] / st.grid.r(static_cast<int>(i))));
        return m;
    }
    std::vector<double> f(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        f[i] = detail::four_pi * std::pow(std::abs(st.w[i] / r), p) * r * r;
    }
    return std::pow(detail::integrate(f, dr), 1.0 / p);
}

struct SpaceTimeNorm {
    double q = 0.0;
    double r = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;
    double value = 0.0;
};

inline constexpr double max_norm_stride = 0.1;

/// L^q([t0, t1], L^r) norm from stored snapshots (trapezoid in time).
inline SpaceTimeNorm spacetime_norm(const Trajectory& tr, double q, double r, double t0, double t1) {
    if (!(t1 > t0)) throw Error(ErrorKind::InvalidArgument, "empty interval");
    const double tol = 1e-9 * std::max(1.0, t1);
    std::vector<double> ts, vals;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double t = tr.times[i];
        if (t < t0 - tol || t > t1 + tol) continue;
        ts.push_back(t);
        vals.push_back(spatial_norm(tr.states[i], r));
    }
    if (ts.size() < 2 || std::abs(ts.front() - t0) > tol || std::abs(ts.back() - t1) > tol)
        throw Error(ErrorKind::IntervalUncovered, "snapshots do not reach the interval ends");
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i] - ts[i - 1] > max_norm_stride + 1e-12)
            throw Error(ErrorKind::IntervalUncovered, "snapshot gap above 0.1 inside the interval");
    SpaceTimeNorm out{q, r, t0, t1, 0.0};
    if (std::isinf(q)) {
        out.value = *std::max_element(vals.begin(), vals.end());
        return out;
    }
    for (double& v : vals) v = std::pow(v, q);
    out.value = std::pow(detail::trapezoid(ts, vals), 1.0 / q);
    return out;
}

inline double tail_norm(const Trajectory& tr, double q, double r, double T, double window) {
    return spacetime_norm(tr, q, r, T, T + window).value;
}

struct BootstrapThreshold {
    double a_max = 0.0;
    double M0_max = 0.0;
    double bound = 0.0;
    bool hypotheses_ok = false;
};

/// Smallness thresholds for M <= a + b M^theta.
inline BootstrapThreshold bootstrap_threshold(double a, double b, double theta) {
    if (!(theta > 1.0)) throw Error(ErrorKind::BadTheta, "theta must exceed 1");
    if (!(b > 0.0) || !(a > 0.0)) throw Error(ErrorKind::InvalidArgument, "a and b must be positive");
    BootstrapThreshold res;
    res.M0_max = std::pow(theta * b, -1.0 / (theta - 1.0));
    res.a_max = (1.0 - 1.0 / theta) * res.M0_max;
    res.bound = theta * a / (theta - 1.0);
    res.hypotheses_ok = a < res.a_max;
    return res;
}

struct BootstrapSearch {
    long trials = 0;
    long counterexamples = 0;
    double worst_ratio = 0.0;  ///< max over trials of max M / bound
};

/// Randomized falsification: draws continuous piecewise-linear paths
/// starting below M0_max, keeps every segment inside {M <= a + b M^theta}
/// (checked exactly), and records any path exceeding the bound.
inline BootstrapSearch bootstrap_falsify(double b, double theta, long trials, std::uint64_t seed,
                                         int vertices = 64) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BootstrapSearch out;
    out.trials = trials;
    for (long k = 0; k < trials; ++k) {
        const BootstrapThreshold th0 = bootstrap_threshold(1.0, b, theta);
        const double a = th0.a_max * (0.02 + 0.97 * unit(rng));
        const BootstrapThreshold th = bootstrap_threshold(a, b, theta);
        auto allowed = [&](double M) { return M <= a + b * std::pow(M, theta); };
        // M - a - b M^theta is concave with its peak at M0_max, so a segment
        // stays admissible iff its end points do and, when it straddles
        // M0_max, that point does too.
        auto segment_ok = [&](double m0, double m1) {
            if (!allowed(m0) || !allowed(m1)) return false;
            const double lo = std::min(m0, m1), hi = std::max(m0, m1);
            return !(lo < th.M0_max && th.M0_max < hi) || allowed(th.M0_max);
        };
        double M = th.M0_max * unit(rng);
        while (!allowed(M)) M = th.M0_max * unit(rng);
        double peak = M;
        const double scale = th.M0_max;
        for (int v = 1; v < vertices; ++v) {
            for (int attempt = 0; attempt < 32; ++attempt) {
                const double next = std::max(0.0, M + scale * (2.0 * unit(rng) - 1.0));
                if (segment_ok(M, next)) {
                    M = next;
                    break;
                }
            }
            peak = std::max(peak, M);
        }
        const double ratio = peak / th.bound;
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        if (peak > th.bound * (1.0 + 1e-12)) ++out.counterexamples;
    }
    return out;
}

}  // namespace kgdecay
