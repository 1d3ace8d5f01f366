#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgdecay/error.hpp"
#include "kgdecay/laxphillips.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/profile.hpp"
#include "kgdecay/strichartz.hpp"

namespace kgdecay::harness {

inline const std::set<std::string>& lax_phillips_checks() {
    static const std::set<std::string> all = {"projectors", "m", "factorization", "adjoint", "decay"};
    return all;
}

struct LaxPhillipsOptions {
    double R = 1.0;
    std::vector<double> times{2.0, 4.0, 8.0, 16.0};
    int ensemble = 100;
    std::uint64_t seed = 0;
    std::set<std::string> checks = lax_phillips_checks();
};

struct LaxPhillipsReport {
    nlohmann::ordered_json json;
    bool pass = true;
};

namespace detail {

inline std::mt19937_64 member_rng(std::uint64_t seed, int index, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), stream};
    return std::mt19937_64(seq);
}

inline double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace detail

/// Scattering-operator checks on interaction-space probes. The cutoff pair
/// must be linear; the grid must hold the longest evolution.
inline LaxPhillipsReport run_lax_phillips(const RadialGrid& grid, const CutoffPair& cut, const SchemeConfig& cfg,
                                          const LaxPhillipsOptions& opt) {
    using nlohmann::ordered_json;
    for (const auto& c : opt.checks)
        if (!lax_phillips_checks().count(c)) throw Error(ErrorKind::InvalidArgument, "unknown check '" + c + "'");
    if (opt.ensemble < 1) throw Error(ErrorKind::InvalidArgument, "ensemble must be positive");
    if (!cut.linear()) throw Error(ErrorKind::InvalidArgument, "scattering checks need chi2 = 0");
    const double R = cut.R;
    const double t_max = opt.times.empty() ? 0.0 : *std::max_element(opt.times.begin(), opt.times.end());
    if (grid.r_max < std::max(t_max, 4.0 * R) + 4.0 * R)
        throw Error(ErrorKind::GridTooSmall, "r_max must be at least max(times, 4R) + 4R");
    const int N = opt.ensemble;
    const auto idx = [](int i) { return static_cast<std::size_t>(i); };
    LaxPhillipsReport rep;
    auto& j = rep.json;
    j["schema_version"] = 1;
    j["R"] = R;
    j["seed"] = opt.seed;
    j["ensemble"] = N;
    j["dr"] = grid.dr;

    if (opt.checks.count("projectors")) {
        std::vector<double> iso(idx(N)), trip(idx(N)), ptrip(idx(N)), idem(idx(N)), orth(idx(N));
        parallel_for(N, [&](int i) {
            const RadialState phi = probe_state(grid, R, opt.seed, i);
            const TranslationProfile p = to_profile(phi);
            const double n = h_norm(phi);
            iso[idx(i)] = std::abs(profile_norm(p) - n) / n;
            trip[idx(i)] = h_norm(from_profile(p) - phi) / n;
            const TranslationProfile back = to_profile(from_profile(p));
            double d = 0.0;
            for (std::size_t m = 0; m < p.k.size(); ++m) d = std::max(d, std::abs(back.k[m] - p.k[m]));
            ptrip[idx(i)] = d / std::max(profile_norm(p), 1e-300);
            double e = 0.0;
            for (Projection w : {Projection::P_plus, Projection::P_minus}) {
                const TranslationProfile once = project(p, w, R);
                const TranslationProfile twice = project(once, w, R);
                for (std::size_t m = 0; m < p.k.size(); ++m) e = std::max(e, std::abs(twice.k[m] - once.k[m]));
            }
            idem[idx(i)] = e;
            auto rng_o = detail::member_rng(opt.seed, i, 1), rng_i = detail::member_rng(opt.seed, i, 2);
            const RadialState go = random_scattering_state(grid, R, 3.0 * R, Direction::outgoing, rng_o);
            const RadialState gi = random_scattering_state(grid, R, 3.0 * R, Direction::incoming, rng_i);
            orth[idx(i)] = std::abs(h_inner(go, gi)) / (h_norm(go) * h_norm(gi));
        });
        const double iso_m = detail::max_of(iso), trip_m = detail::max_of(std::vector<double>{detail::max_of(trip), detail::max_of(ptrip)});
        const double idem_m = detail::max_of(idem), orth_m = detail::max_of(orth);
        const bool ok = iso_m <= 1e-6 && trip_m <= 1e-8 && idem_m == 0.0 && orth_m <= 1e-10;
        j["projectors"] = {{"isometry_max_relative", iso_m}, {"round_trip_max", trip_m},
                           {"idempotence_max", idem_m}, {"outgoing_incoming_inner_max", orth_m}, {"pass", ok}};
        rep.pass = rep.pass && ok;
    }

    if (opt.checks.count("m")) {
        std::vector<double> leak(idx(N)), ratio(idx(N));
        parallel_for(N, [&](int i) {
            const RadialState phi = probe_state(grid, R, opt.seed, i);
            const RadialState m = m_apply(phi, cut, cfg);
            const double n = h_norm(phi);
            leak[idx(i)] = exterior_norm(m, 3.0 * R) / n;
            ratio[idx(i)] = h_norm(m) / (2.0 * restricted_norm(phi, 5.0 * R));
        });
        const double leak_m = detail::max_of(leak), ratio_m = detail::max_of(ratio);
        const bool ok = leak_m <= 1e-6 && ratio_m <= 1.0 + 1e-3;
        j["m"] = {{"leakage_max", leak_m}, {"norm_ratio_max", ratio_m}, {"pass", ok}};
        rep.pass = rep.pass && ok;
    }

    if (opt.checks.count("factorization")) {
        std::vector<double> ts{4.0 * R};
        for (double t : opt.times)
            if (t > 4.0 * R) ts.push_back(t);
        ordered_json arr = ordered_json::array();
        bool ok = true;
        for (double t : ts) {
            std::vector<double> res(idx(N));
            parallel_for(N, [&](int i) { res[idx(i)] = verify_factorization(probe_state(grid, R, opt.seed, i), t, cut, cfg); });
            const double m = detail::max_of(res);
            ok = ok && m <= 1e-4;
            arr.push_back({{"t", t}, {"max_residual", m}});
        }
        j["factorization"] = {{"times", arr}, {"pass", ok}};
        rep.pass = rep.pass && ok;
    }

    if (opt.checks.count("adjoint")) {
        ordered_json arr = ordered_json::array();
        bool ok = true;
        for (double t : opt.times) {
            std::vector<double> res(idx(N));
            parallel_for(N, [&](int i) {
                auto rng = detail::member_rng(opt.seed, i, 2);
                const RadialState g = random_scattering_state(grid, R, 3.0 * R, Direction::incoming, rng);
                res[idx(i)] = adjoint_identity_residual(g, probe_state(grid, R, opt.seed, i), t, cut, cfg);
            });
            const double m = detail::max_of(res);
            ok = ok && m <= 1e-4;
            arr.push_back({{"t", t}, {"max_residual", m}});
        }
        j["adjoint"] = {{"times", arr}, {"pass", ok}};
        rep.pass = rep.pass && ok;
    }

    if (opt.checks.count("decay")) {
        std::vector<double> ts = opt.times, maxima;
        std::sort(ts.begin(), ts.end());
        ordered_json arr = ordered_json::array();
        for (double t : ts) {
            const OperatorProbe p = probe_norm({OperatorKind::Z_KG, t}, opt.seed, N, cut, cfg, grid);
            maxima.push_back(p.max_ratio);
            arr.push_back({{"t", t}, {"max_ratio", p.max_ratio}});
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < maxima.size(); ++i) decreasing = decreasing && maxima[i] < maxima[i - 1];
        // least squares slope of log max ratio against t
        double slope = 0.0;
        if (ts.size() >= 2) {
            double mt = 0.0, my = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) mt += ts[i], my += std::log(std::max(maxima[i], 1e-300));
            mt /= static_cast<double>(ts.size());
            my /= static_cast<double>(ts.size());
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                sxy += (ts[i] - mt) * (std::log(std::max(maxima[i], 1e-300)) - my);
                sxx += (ts[i] - mt) * (ts[i] - mt);
            }
            slope = sxx > 0.0 ? sxy / sxx : 0.0;
        }
        ordered_json contraction = nullptr, half = nullptr;
        for (std::size_t i = 0; i < ts.size(); ++i)
            if (maxima[i] <= 0.9) {
                contraction = ts[i];
                // the half-norm level is checked at T + 4R, reported only
                for (std::size_t k = i; k < ts.size(); ++k)
                    if (ts[k] >= ts[i] + 4.0 * R - 1e-12) {
                        half = {{"t", ts[k]}, {"max_ratio", maxima[k]}, {"below_half", maxima[k] <= 0.5}};
                        break;
                    }
                break;
            }
        const bool ok = decreasing && slope < 0.0 && !contraction.is_null() && contraction.get<double>() <= 16.0;
        j["decay"] = {{"times", arr}, {"strictly_decreasing", decreasing}, {"log_slope", slope},
                      {"contraction_time", contraction}, {"half_check", half}, {"pass", ok}};
        rep.pass = rep.pass && ok;
    }
    j["pass"] = rep.pass;
    return rep;
}

struct StrichartzRow {
    double q = 0.0, r = 0.0, t0 = 0.0, t1 = 0.0, value = 0.0;
    bool admissible = false;
};

/// Space-time norms of a stored run over the interval and the tail windows.
inline std::vector<StrichartzRow> strichartz_table(const Trajectory& tr, const std::vector<std::pair<double, double>>& pairs,
                                                   std::pair<double, double> interval,
                                                   const std::vector<std::pair<double, double>>& tails) {
    std::vector<StrichartzRow> rows;
    for (auto [q, r] : pairs) {
        const bool adm = admissible_for_some_theta(q, r);
        auto add = [&](double t0, double t1) {
            rows.push_back({q, r, t0, t1, spacetime_norm(tr, q, r, t0, t1).value, adm});
        };
        add(interval.first, interval.second);
        for (auto [T, W] : tails) add(T, T + W);
    }
    return rows;
}

}  // namespace kgdecay::harness
