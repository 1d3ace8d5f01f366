#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "kgdecay/detail/grid_ops.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/profile.hpp"
#include "kgdecay/solver.hpp"

namespace kgdecay {

/// Scheme used by the scattering-operator checks: at cfl = 1 the free part of
/// the stepper is exactly the discrete d'Alembert solution, so finite speed of
/// propagation holds to roundoff.
inline SchemeConfig exact_transport_scheme() {
    SchemeConfig c;
    c.scheme = Scheme::discrete_gradient;
    c.cfl = 1.0;
    return c;
}

/// Localized linear evolution U_KG(t), t >= 0. `dt` > 0 pins the step.
inline RadialState kg_group_apply(const RadialState& st, double t, const CutoffPair& cut, const SchemeConfig& cfg,
                                  double dt = 0.0) {
    if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "U_KG is only defined forward in time");
    if (!cut.linear()) throw Error(ErrorKind::InvalidArgument, "U_KG needs chi2 = 0");
    if (t == 0.0) return st;
    EvolveOptions opts;
    opts.dt = dt;
    opts.record_trace = false;
    opts.record_energy = false;
    Trajectory tr = evolve(st, cut, cfg, t, {}, 0.0, opts);
    return tr.states.back();
}

namespace detail {

inline RadialState project_state(const RadialState& st, Projection which, double R) {
    return from_profile(project(to_profile(st), which, R), st.t);
}

}  // namespace detail

/// Z_KG(t) = P+ U_KG(t) P-.
inline RadialState z_apply(const RadialState& st, double t, const CutoffPair& cut, const SchemeConfig& cfg) {
    const RadialState in = detail::project_state(st, Projection::P_minus, cut.R);
    return detail::project_state(kg_group_apply(in, t, cut, cfg), Projection::P_plus, cut.R);
}

/// M = U_KG(2R) - U(2R).
inline RadialState m_apply(const RadialState& st, const CutoffPair& cut, const SchemeConfig& cfg) {
    const double T = 2.0 * cut.R;
    RadialState out = kg_group_apply(st, T, cut, cfg);
    out -= free_wave_exact(st, T);
    return out;
}

/// || Z(t) phi - P+ M U_KG(t - 4R) M P- phi || / || phi ||.
inline double verify_factorization(const RadialState& phi, double t, const CutoffPair& cut, const SchemeConfig& cfg) {
    const double R = cut.R;
    if (t < 4.0 * R - 1e-12) throw Error(ErrorKind::TimeTooSmall, "factorization needs t >= 4R");
    const double norm = h_norm(phi);
    if (norm == 0.0) return 0.0;
    const RadialState lhs = z_apply(phi, t, cut, cfg);
    RadialState x = detail::project_state(phi, Projection::P_minus, R);
    x = m_apply(x, cut, cfg);
    x = kg_group_apply(x, t - 4.0 * R, cut, cfg);
    x = m_apply(x, cut, cfg);
    x = detail::project_state(x, Projection::P_plus, R);
    return h_norm(lhs - x) / norm;
}

/// |<U_KG(t) phi, g> - <phi, U(-t) g>| / (|phi| |g|) for incoming g.
inline double adjoint_identity_residual(const RadialState& g, const RadialState& phi, double t, const CutoffPair& cut,
                                        const SchemeConfig& cfg) {
    const TranslationProfile kg = to_profile(g);
    const double total = profile_norm(kg);
    double leak = 0.0;
    for (std::size_t j = 0; j < kg.k.size(); ++j)
        if (kg.s(j) > -cut.R + 1e-9 * kg.ds) leak += kg.k[j] * kg.k[j];
    leak = std::sqrt(leak * kg.ds);
    if (leak > 1e-8 * std::max(total, 1e-300)) throw Error(ErrorKind::NotIncoming, "g is not incoming");
    const double ng = h_norm(g), np = h_norm(phi);
    if (ng == 0.0 || np == 0.0) return 0.0;
    const double lhs = h_inner(kg_group_apply(phi, t, cut, cfg), g);
    const double rhs = h_inner(phi, free_wave_exact(g, -t));
    return std::abs(lhs - rhs) / (np * ng);
}

namespace detail {

// Adds a multiple of a smooth bump centred in [lo, hi] so that k has zero
// sum, which makes the reconstructed field vanish beyond the support.
inline void zero_tail(TranslationProfile& p, double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    std::vector<double> b(p.k.size());
    double sk = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < p.k.size(); ++j) {
        b[j] = bump((p.s(j) - mid) / (0.95 * half));
        sk += p.k[j];
        sb += b[j];
    }
    for (std::size_t j = 0; j < p.k.size(); ++j) p.k[j] -= sk / sb * b[j];
}

inline void normalize(TranslationProfile& p) {
    const double n = profile_norm(p);
    if (n > 0.0)
        for (double& x : p.k) x /= n;
}

}  // namespace detail

/// Random smooth profile supported in (-R, R), zero tail, unit energy norm.
inline RadialState random_interaction_state(const RadialGrid& grid, double R, std::mt19937_64& rng) {
    TranslationProfile p = make_profile(grid);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> coef(0.0, 1.0);
    for (int m = 0; m < 4; ++m) {
        const double sg = R * (0.15 + 0.25 * unit(rng));
        const double mu = (-R + sg) + (2.0 * (R - sg)) * unit(rng);
        const double c = coef(rng);
        for (std::size_t j = 0; j < p.k.size(); ++j) p.k[j] += c * detail::bump((p.s(j) - mu) / sg);
    }
    detail::zero_tail(p, -R, R);
    detail::normalize(p);
    return from_profile(p);
}

enum class Direction { outgoing, incoming };

/// Random derivative-of-bump profile supported in [R, R+L] (outgoing) or
/// [-R-L, -R] (incoming), zero tail, unit energy norm.
inline RadialState random_scattering_state(const RadialGrid& grid, double R, double L, Direction dir,
                                           std::mt19937_64& rng) {
    TranslationProfile p = make_profile(grid);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> coef(0.0, 1.0);
    const double lo = dir == Direction::outgoing ? R : -R - L;
    const double hi = lo + L;
    for (int m = 0; m < 3; ++m) {
        const double sg = L * (0.1 + 0.3 * unit(rng));
        const double mu = (lo + sg) + (L - 2.0 * sg) * unit(rng);
        const double c = coef(rng);
        for (std::size_t j = 0; j < p.k.size(); ++j) p.k[j] += c * detail::bump_derivative((p.s(j) - mu) / sg);
    }
    detail::zero_tail(p, lo, hi);
    detail::normalize(p);
    return from_profile(p);
}

enum class OperatorKind { identity, P_plus, P_minus, U, U_KG, Z_KG, M };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::identity: return "identity";
        case OperatorKind::P_plus: return "P_plus";
        case OperatorKind::P_minus: return "P_minus";
        case OperatorKind::U: return "U";
        case OperatorKind::U_KG: return "U_KG";
        case OperatorKind::Z_KG: return "Z_KG";
        case OperatorKind::M: return "M";
    }
    return "unknown";
}

struct OperatorTag {
    OperatorKind kind = OperatorKind::identity;
    double t = 0.0;
};

inline RadialState apply_operator(const OperatorTag& op, const RadialState& phi, const CutoffPair& cut,
                                  const SchemeConfig& cfg) {
    switch (op.kind) {
        case OperatorKind::identity: return phi;
        case OperatorKind::P_plus: return detail::project_state(phi, Projection::P_plus, cut.R);
        case OperatorKind::P_minus: return detail::project_state(phi, Projection::P_minus, cut.R);
        case OperatorKind::U: return free_wave_exact(phi, op.t);
        case OperatorKind::U_KG: return kg_group_apply(phi, op.t, cut, cfg);
        case OperatorKind::Z_KG: return z_apply(phi, op.t, cut, cfg);
        case OperatorKind::M: return m_apply(phi, cut, cfg);
    }
    return phi;
}

struct OperatorProbe {
    std::uint64_t seed = 0;
    int ensemble_size = 0;
    std::vector<double> ratios;
    double max_ratio = 0.0;
};

/// Probe member `index` of the ensemble for `seed`; independent of ordering.
inline RadialState probe_state(const RadialGrid& grid, double R, std::uint64_t seed, int index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    return random_interaction_state(grid, R, rng);
}

/// Runs `fn(i)` for i in [0, n) on a pool of async tasks.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
    const int workers = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        }));
    for (auto& j : jobs) j.get();
}

/// Ratios |Op phi| / |phi| over a seeded ensemble of interaction-space probes.
inline OperatorProbe probe_norm(const OperatorTag& op, std::uint64_t seed, int ensemble_size, const CutoffPair& cut,
                                const SchemeConfig& cfg, const RadialGrid& grid) {
    if (ensemble_size < 1) throw Error(ErrorKind::InvalidArgument, "ensemble must be nonempty");
    OperatorProbe out;
    out.seed = seed;
    out.ensemble_size = ensemble_size;
    out.ratios.assign(static_cast<std::size_t>(ensemble_size), 0.0);
    parallel_for(ensemble_size, [&](int i) {
        const RadialState phi = probe_state(grid, cut.R, seed, i);
        out.ratios[static_cast<std::size_t>(i)] = h_norm(apply_operator(op, phi, cut, cfg)) / h_norm(phi);
    });
    out.max_ratio = *std::max_element(out.ratios.begin(), out.ratios.end());
    return out;
}

}  // namespace kgdecay
