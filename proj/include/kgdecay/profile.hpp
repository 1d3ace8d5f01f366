#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "kgdecay/detail/grid_ops.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/model.hpp"

namespace kgdecay {

/// Scale linking the profile to the radial energy norm, sqrt(8 pi).
inline const double profile_scale = std::sqrt(8.0 * std::numbers::pi);

/// Translation representer k(s) of radial free-wave data on the line
/// s in [-r_max, r_max], sampled with the radial spacing. The free group acts
/// on it by translation.
struct TranslationProfile {
    double s_min = 0.0;
    double ds = 0.0;
    std::vector<double> k;
    /// Radial grid the profile was taken from (k has 2n-1 samples).
    RadialGrid grid;

    double s(std::size_t j) const { return s_min + ds * static_cast<double>(j); }
    double s_max() const { return s(k.size() - 1); }
    /// Index of s = 0.
    std::size_t origin() const { return grid.size() - 1; }
};

inline TranslationProfile make_profile(const RadialGrid& grid) {
    TranslationProfile p;
    p.grid = grid;
    p.ds = grid.dr;
    p.s_min = -grid.r_max;
    p.k.assign(2 * grid.size() - 1, 0.0);
    return p;
}

inline TranslationProfile to_profile(const RadialState& st) {
    TranslationProfile p = make_profile(st.grid);
    const auto dw = detail::radial_derivative(st.w, st.grid.dr);
    const std::size_t N = p.origin();
    const double c = 0.5 * profile_scale;
    for (std::size_t i = 0; i <= N; ++i) {
        p.k[N + i] = c * (dw[i] - st.v[i]);
        p.k[N - i] = c * (dw[i] + st.v[i]);
    }
    return p;
}

/// Inverse of to_profile. The primitive F of k is built by inverting the
/// centered difference, so the round trip is exact on the grid.
inline RadialState from_profile(const TranslationProfile& p, double t = 0.0) {
    const std::size_t M = p.k.size();
    std::vector<double> F(M, 0.0);
    const double step = 2.0 * p.ds / profile_scale;
    for (std::size_t j = 1; j + 1 < M; ++j) F[j + 1] = F[j - 1] + step * p.k[j];
    RadialState st(p.grid, t);
    const std::size_t N = p.origin();
    for (std::size_t i = 1; i <= N; ++i) {
        st.w[i] = F[N + i] - F[N - i];
        st.v[i] = (p.k[N - i] - p.k[N + i]) / profile_scale;
    }
    return st;
}

/// L2 inner product on the profile line (trapezoid).
inline double profile_inner(const TranslationProfile& a, const TranslationProfile& b) {
    const std::size_t M = a.k.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        const double wgt = (j == 0 || j + 1 == M) ? 0.5 : 1.0;
        acc += wgt * a.k[j] * b.k[j];
    }
    return acc * a.ds;
}

inline double profile_norm(const TranslationProfile& p) { return std::sqrt(profile_inner(p, p)); }

/// Free evolution by t on the profile: k(s) -> k(s - t). Integer multiples of
/// ds are exact index shifts; otherwise linear interpolation.
inline TranslationProfile shift(const TranslationProfile& p, double t) {
    if (std::abs(t) > p.grid.r_max + 1e-12)
        throw Error(ErrorKind::ProfileOutOfRange, "shift exceeds the representable window");
    TranslationProfile out = p;
    const long M = static_cast<long>(p.k.size());
    const double x = t / p.ds;
    const double xr = std::round(x);
    if (std::abs(x - xr) < 1e-9) {
        const long m = static_cast<long>(xr);
        for (long j = 0; j < M; ++j) {
            const long src = j - m;
            out.k[j] = (src >= 0 && src < M) ? p.k[src] : 0.0;
        }
        return out;
    }
    for (long j = 0; j < M; ++j) {
        const double src = static_cast<double>(j) - x;
        const double fl = std::floor(src);
        const long j0 = static_cast<long>(fl);
        const double th = src - fl;
        const double a = (j0 >= 0 && j0 < M) ? p.k[j0] : 0.0;
        const double b = (j0 + 1 >= 0 && j0 + 1 < M) ? p.k[j0 + 1] : 0.0;
        out.k[j] = (1.0 - th) * a + th * b;
    }
    return out;
}

enum class Projection { P_plus, P_minus };

/// P_plus removes the outgoing part (s >= R), P_minus the incoming part (s <= -R).
inline TranslationProfile project(const TranslationProfile& p, Projection which, double R) {
    TranslationProfile out = p;
    const double tol = 1e-9 * p.ds;
    for (std::size_t j = 0; j < p.k.size(); ++j) {
        const double s = p.s(j);
        if (which == Projection::P_plus ? (s >= R - tol) : (s <= -R + tol)) out.k[j] = 0.0;
    }
    return out;
}

/// Free energy inner product 4 pi int (v1 v2 + w1' w2') dr (trapezoid, centered w').
inline double h_inner(const RadialState& a, const RadialState& b) {
    const auto da = detail::radial_derivative(a.w, a.grid.dr);
    const auto db = detail::radial_derivative(b.w, b.grid.dr);
    const std::size_t n = a.w.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wgt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += wgt * (a.v[i] * b.v[i] + da[i] * db[i]);
    }
    return detail::four_pi * acc * a.grid.dr;
}

inline double h_norm(const RadialState& a) { return std::sqrt(std::max(0.0, h_inner(a, a))); }

namespace detail {

// 4 pi (v^2 + (w' - w/r)^2) per node; vanishes at the origin.
inline std::vector<double> restricted_density(const RadialState& st) {
    const auto dw = radial_derivative(st.w, st.grid.dr);
    std::vector<double> f(st.w.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double r = st.grid.r(static_cast<int>(i));
        const double g = dw[i] - st.w[i] / r;
        f[i] = four_pi * (st.v[i] * st.v[i] + g * g);
    }
    return f;
}

}  // namespace detail

/// Energy norm restricted to the ball B_rho.
inline double restricted_norm(const RadialState& st, double rho) {
    const auto f = detail::restricted_density(st);
    return std::sqrt(std::max(0.0, detail::integrate_to(f, st.grid.dr, rho)));
}

/// Energy norm outside B_rho, including the static 1/r tail beyond the grid.
inline double exterior_norm(const RadialState& st, double rho) {
    const auto f = detail::restricted_density(st);
    const double total = detail::integrate(f, st.grid.dr);
    const double inner = detail::integrate_to(f, st.grid.dr, rho);
    const double wn = st.w.back();
    return std::sqrt(std::max(0.0, total - inner + detail::four_pi * wn * wn / st.grid.r_max));
}

}  // namespace kgdecay
