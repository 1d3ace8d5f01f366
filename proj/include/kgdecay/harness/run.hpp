#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgdecay/analysis.hpp"
#include "kgdecay/energy.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/harness/config.hpp"
#include "kgdecay/harness/svg.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/solver.hpp"

namespace kgdecay::harness {

inline constexpr const char* version = "1.0.0";
inline constexpr int schema_version = 1;

using json = nlohmann::ordered_json;

struct FluxCheck {
    double a = 0.0, b = 0.0;
    double residual = 0.0;           ///< e(b) - e(a) - flux
    double relative = 0.0;           ///< |residual| / max(e(b), flux)
    double residual_shifted = 0.0;   ///< same with the t/(t+1) velocity weight
};

struct PohozaevCheck {
    double a = 0.0, b = 0.0;
    PohozaevTerms terms;
    double relative = 0.0;  ///< |residual| / sum of |terms|
};

struct ConeRatio {
    double a = 0.0, b = 0.0, ratio = 0.0;
};

struct Identities {
    std::vector<FluxCheck> flux;
    std::vector<PohozaevCheck> pohozaev;
    std::vector<ConeRatio> cone;
    std::vector<double> H_t, H;
    double H_violation = 0.0;      ///< max_{a<b} (H(a) - H(b)) / max(H(b), 1)
    double bound_violation = 0.0;  ///< max_t (int chi2 u^6/6 over B_t - H/t) / max(H, 1)
    double max_cone_ratio = 0.0;
    double horizon = 0.0;  ///< last time whose light cone stays clear of the outer wall

    double max_flux_relative() const {
        double m = 0.0;
        for (const auto& f : flux) m = std::max(m, f.relative);
        return m;
    }
    double max_flux_residual() const {
        double m = 0.0;
        for (const auto& f : flux) m = std::max(m, std::abs(f.residual));
        return m;
    }
    double max_pohozaev_relative() const {
        double m = 0.0;
        for (const auto& p : pohozaev) m = std::max(m, p.relative);
        return m;
    }
    bool ok(double tol = 1e-6) const {
        return H_violation <= tol && bound_violation <= tol && max_flux_relative() <= 1e-3 &&
               max_pohozaev_relative() <= 1e-3;
    }
};

struct RunReport {
    ScenarioConfig config;
    std::uint64_t seed = 0;
    std::vector<EnergyReport> series;
    double E0 = 0.0;
    double max_energy_drift = 0.0;
    double dt = 0.0;
    Theorem1Verdict verdict;
    bool huygens_checked = false;
    double huygens_max_ratio = 0.0;  ///< max over t > 2R of E_R / E(0)
    Identities identities;
    std::vector<std::string> files;
    double wall_time = 0.0;

    /// Verdict used for the exit code of `simulate`.
    bool pass() const {
        if (huygens_checked) return verdict.pass && huygens_max_ratio <= 1e-6;
        return verdict.pass;
    }
};

/// Twenty windows [a, a + 2] starting just outside the interaction ball and
/// ending before `t_max`.
inline std::vector<std::pair<double, double>> cone_sweep_windows(double R, double t_max) {
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k < 20; ++k) {
        const double a = R + 0.5 + 0.25 * k;
        if (a + 2.0 <= t_max + 1e-9) out.emplace_back(a, a + 2.0);
    }
    return out;
}

/// Identity residuals of a stored run; windows that the run cannot resolve
/// are skipped.
/// Cone identities on [R, horizon]. Past r_max - r_data the wave has met the
/// outer wall, and B_t no longer sees the whole-space solution.
inline Identities compute_identities(const Trajectory& tr, const CutoffPair& cut,
                                     const std::vector<std::pair<double, double>>& windows, double r_data) {
    Identities id;
    const double t_max = std::min({tr.t_end(), tr.trace_end(), tr.grid.r_max - r_data});
    id.horizon = t_max;
    for (auto [a, b] : windows) {
        if (b > t_max + 1e-9) continue;
        const ConeWindow win{a, b};
        FluxCheck f{a, b};
        const double eb = cone_energy(tr, b, cut), ea = cone_energy(tr, a, cut);
        const double flux = mantle_flux(tr, win, cut);
        f.residual = eb - ea - flux;
        f.relative = std::abs(f.residual) / std::max({std::abs(eb), std::abs(flux), 1e-300});
        f.residual_shifted = eb - ea - mantle_flux(tr, win, cut, FluxVariant::shifted);
        id.flux.push_back(f);
        try {
            PohozaevCheck p{a, b, pohozaev_balance(tr, win, cut)};
            const auto& q = p.terms;
            const double scale = std::abs(q.I) + std::abs(q.II) + std::abs(q.III) + std::abs(q.IV) + std::abs(q.V);
            p.relative = scale > 0.0 ? std::abs(q.residual) / scale : 0.0;
            id.pohozaev.push_back(p);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SnapshotsTooSparse) throw;
        }
    }
    for (auto [a, b] : cone_sweep_windows(cut.R, t_max)) {
        const double r = cone_bound_ratio(tr, {a, b}, cut);
        id.cone.push_back({a, b, r});
        id.max_cone_ratio = std::max(id.max_cone_ratio, r);
    }
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double t = tr.times[i];
        if (t <= cut.R + 1e-12) continue;
        if (t > t_max + 1e-9) break;
        const double H = H_of(tr.states[i], cut);
        id.H_t.push_back(t);
        id.H.push_back(H);
        const double scale = std::max(H, 1.0);
        if (running > H) id.H_violation = std::max(id.H_violation, (running - H) / scale);
        running = std::max(running, H);
        const double lhs = chi2_u6_ball(tr.states[i], cut, t) / 6.0;
        id.bound_violation = std::max(id.bound_violation, (lhs - H / t) / scale);
    }
    return id;
}

namespace detail {

inline bool on_stride(double t, double stride) {
    const double k = std::round(t / stride);
    return std::abs(t - k * stride) <= 1e-9 * std::max(1.0, std::abs(t));
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json identities_json(const Identities& id) {
    json j;
    j["flux_residuals"] = json::array();
    for (const auto& f : id.flux)
        j["flux_residuals"].push_back(
            {{"a", f.a}, {"b", f.b}, {"residual", f.residual}, {"relative", f.relative},
             {"residual_shifted", f.residual_shifted}});
    j["H_series"] = json::array();
    for (std::size_t i = 0; i < id.H.size(); ++i) j["H_series"].push_back({{"t", id.H_t[i]}, {"H", id.H[i]}});
    j["H_monotonicity_violation"] = id.H_violation;
    j["sextic_bound_violation"] = id.bound_violation;
    json p = json::array();
    for (const auto& q : id.pohozaev)
        p.push_back({{"a", q.a}, {"b", q.b}, {"I", q.terms.I}, {"II", q.terms.II}, {"III", q.terms.III},
                     {"IV", q.terms.IV}, {"V", q.terms.V}, {"residual", q.terms.residual},
                     {"relative", q.relative}});
    j["pohozaev"] = {{"windows", p}, {"max_relative", id.max_pohozaev_relative()}};
    j["cone_ratios"] = json::array();
    for (const auto& c : id.cone) j["cone_ratios"].push_back({{"a", c.a}, {"b", c.b}, {"ratio", c.ratio}});
    j["max_cone_ratio"] = id.max_cone_ratio;
    j["horizon"] = id.horizon;
    j["pass"] = id.ok();
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::ConfigInvalid, "scenario.output_dir: cannot write '" + p.string() + "'");
    out << text;
}

inline std::string g17(double x) { return fmt(x); }

}  // namespace detail

inline void write_series_csv(std::ostream& os, const std::vector<EnergyReport>& series) {
    os << "t,E,E_R,e_cone,H,chi2_u6\n";
    for (const auto& s : series)
        os << detail::g17(s.t) << ',' << detail::g17(s.E) << ',' << detail::g17(s.E_R) << ','
           << detail::g17(s.e_cone) << ',' << detail::g17(s.H) << ',' << detail::g17(s.chi2_u6) << '\n';
}

/// Config with the seed applied to the initial data.
inline ScenarioConfig seeded(const ScenarioConfig& cfg, std::uint64_t seed) {
    ScenarioConfig c = cfg;
    c.data.seed = seed;
    return c;
}

/// Runs one scenario with the data seed already set in `cfg`, writing every
/// artifact into cfg.output_dir.
inline RunReport run_scenario(const ScenarioConfig& cfg) {
    namespace fs = std::filesystem;
    validate(cfg);
    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.config = cfg;
    rep.seed = cfg.data.seed;

    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(ErrorKind::ConfigInvalid, "scenario.output_dir: cannot create '" + cfg.output_dir + "'");

    Trajectory tr;
    CutoffPair cut;
    try {
        const RadialGrid grid = make_grid(cfg);
        cut = make_cutoffs(cfg, grid);
        const RadialState init = make_initial_data(cfg.data, grid);
        tr = evolve(init, cut, cfg.scheme, cfg.T_final, {}, cfg.snapshot_stride);
    } catch (const Error& e) {
        throw Error(e.kind(), "run '" + cfg.name + "': " + e.what(), e.node(), e.iteration());
    }
    rep.dt = tr.dt;
    rep.max_energy_drift = tr.max_energy_drift();
    for (const auto& st : tr.states) rep.series.push_back(energy_report(st, cut, cfg.observation_radius));
    rep.E0 = rep.series.front().E;

    std::vector<double> t, ER;
    for (const auto& s : rep.series) {
        t.push_back(s.t);
        ER.push_back(s.E_R);
    }
    const double t1 = std::min(cfg.fit_t1, cfg.T_final);
    rep.verdict = theorem1_verdict(t, ER, rep.E0, cfg.fit_t0, t1 > cfg.fit_t0 ? t1 : cfg.fit_t0 + 1.0);
    if (cut.linear() && std::all_of(cut.chi1.begin(), cut.chi1.end(), [](double c) { return c == 0.0; })) {
        rep.huygens_checked = true;
        for (const auto& s : rep.series)
            if (s.t > 2.0 * cut.R + 1e-9 && rep.E0 > 0.0)
                rep.huygens_max_ratio = std::max(rep.huygens_max_ratio, s.E_R / rep.E0);
    }
    rep.identities = compute_identities(tr, cut, cfg.windows, std::max(cfg.data.support_radius, cfg.R));

    // CSV artifacts
    {
        std::ostringstream os;
        write_series_csv(os, rep.series);
        detail::write_text(dir / "series.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "t,r,w,v\n";
        for (const auto& st : tr.states) {
            if (!detail::on_stride(st.t, cfg.dump_stride) && &st != &tr.states.back()) continue;
            for (std::size_t i = 0; i < st.w.size(); ++i)
                os << detail::g17(st.t) << ',' << detail::g17(st.grid.r(static_cast<int>(i))) << ','
                   << detail::g17(st.w[i]) << ',' << detail::g17(st.v[i]) << '\n';
        }
        detail::write_text(dir / "snapshots.csv", os.str());
    }
    {
        json j;
        j["schema_version"] = schema_version;
        j["scheme"] = to_string(cfg.scheme.scheme);
        j["cfl"] = cfg.scheme.cfl;
        j["dt"] = tr.dt;
        j["dr"] = tr.grid.dr;
        j["r_max"] = tr.grid.r_max;
        j["nodes"] = tr.grid.n;
        j["snapshot_stride"] = tr.stride;
        j["snapshots"] = tr.times.size();
        j["cutoffs"] = {{"R", cfg.R}, {"a1", cfg.a1}, {"a2", cfg.a2}, {"table", cfg.cutoff_table}};
        j["max_energy_drift"] = rep.max_energy_drift;
        detail::write_text(dir / "trajectory.json", j.dump(2) + "\n");
    }
    {
        std::vector<double> x, y, env;
        for (const auto& s : rep.series) {
            x.push_back(s.t);
            y.push_back(s.E_R > 0.0 && rep.E0 > 0.0 ? std::log10(std::max(s.E_R / rep.E0, 1e-40)) : -40.0);
            if (std::isfinite(rep.verdict.alpha))
                env.push_back(std::log10(rep.verdict.C) - rep.verdict.alpha * s.t / std::log(10.0));
        }
        std::vector<Series> plot{{"E_R / E(0)", "#1f4e9a", x, y}};
        if (!env.empty()) plot.push_back({"C exp(-alpha t)", "#c0392b", x, env, true});
        std::ostringstream os;
        write_line_plot(os, cfg.name + ": local energy", "t", "E_R / E(0)", plot, true);
        detail::write_text(dir / "energy.svg", os.str());
    }
    {
        std::vector<std::string> labels;
        std::vector<double> values;
        for (const auto& f : rep.identities.flux) {
            labels.push_back("flux [" + detail::fmt(f.a) + "," + detail::fmt(f.b) + "]");
            values.push_back(std::abs(f.relative));
        }
        for (const auto& p : rep.identities.pohozaev) {
            labels.push_back("multiplier [" + detail::fmt(p.a) + "," + detail::fmt(p.b) + "]");
            values.push_back(p.relative);
        }
        labels.push_back("H monotonicity");
        values.push_back(rep.identities.H_violation);
        labels.push_back("sextic bound");
        values.push_back(std::max(0.0, rep.identities.bound_violation));
        labels.push_back("energy drift");
        values.push_back(rep.max_energy_drift);
        std::ostringstream os;
        write_bar_plot(os, cfg.name + ": identity residuals", labels, values);
        detail::write_text(dir / "residuals.svg", os.str());
    }
    rep.files = {"series.csv", "snapshots.csv", "trajectory.json", "energy.svg", "residuals.svg", "report.json"};
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json j;
    j["schema_version"] = schema_version;
    j["name"] = cfg.name;
    j["config"] = serialize(cfg);
    j["files"] = rep.files;
    j["energy"] = {{"E0", rep.E0}, {"max_relative_drift", rep.max_energy_drift}, {"dt", rep.dt}};
    const auto& v = rep.verdict;
    json verdict = {{"window", {v.t0, v.t1}}, {"r2", v.r2}, {"C", v.C},
                    {"max_envelope_ratio", v.max_envelope_ratio}, {"envelope_ok", v.envelope_ok},
                    {"degenerate_fast", v.degenerate_fast}, {"pass", v.pass}};
    if (std::isfinite(v.alpha)) verdict["alpha"] = v.alpha;
    if (rep.huygens_checked) verdict["huygens_max_ratio"] = rep.huygens_max_ratio;
    j["verdict"] = verdict;
    j["identities"] = detail::identities_json(rep.identities);
    j["provenance"] = {{"version", version}, {"seed", rep.seed}, {"wall_time", rep.wall_time}};
    detail::write_text(dir / "report.json", j.dump(2) + "\n");
    return rep;
}

/// One run per configured seed; several seeds go to seed_<s> subdirectories.
inline std::vector<RunReport> run_seeds(const ScenarioConfig& cfg) {
    std::vector<RunReport> out;
    for (std::uint64_t s : cfg.seeds) {
        ScenarioConfig c = seeded(cfg, s);
        if (cfg.seeds.size() > 1) c.output_dir = (std::filesystem::path(cfg.output_dir) / ("seed_" + std::to_string(s))).string();
        out.push_back(run_scenario(c));
    }
    return out;
}

struct SweepResult {
    std::string axis;
    std::vector<std::string> values;
    std::vector<RunReport> runs;
    /// Observed order of the max flux residual between consecutive variants;
    /// NaN where undefined or for axes that are not refinements.
    std::vector<double> flux_order;
};

inline bool is_refinement_axis(const std::string& axis) {
    return axis == "dr" || axis == "grid.dr";
}

/// Runs each variant concurrently in its own subdirectory and writes
/// sweep.csv into the template's output_dir.
inline SweepResult sweep(const ScenarioConfig& base, const std::string& axis, const std::vector<std::string>& values) {
    namespace fs = std::filesystem;
    if (values.empty()) throw Error(ErrorKind::ConfigInvalid, "sweep: values list is empty");
    std::vector<ScenarioConfig> variants;
    for (std::size_t i = 0; i < values.size(); ++i) {
        ScenarioConfig c = with_field(base, axis, values[i]);
        c.output_dir = (fs::path(base.output_dir) / ("variant_" + std::to_string(i))).string();
        c.name = base.name + "[" + axis + "=" + values[i] + "]";
        variants.push_back(seeded(c, base.seeds.front()));
    }
    SweepResult res;
    res.axis = axis;
    res.values = values;
    std::vector<std::future<RunReport>> jobs;
    for (const auto& c : variants) jobs.push_back(std::async(std::launch::async, [c] { return run_scenario(c); }));
    for (auto& j : jobs) res.runs.push_back(j.get());

    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.flux_order.assign(values.size(), nan);
    if (is_refinement_axis(axis))
        for (std::size_t i = 1; i < values.size(); ++i) {
            const double e0 = res.runs[i - 1].identities.max_flux_residual();
            const double e1 = res.runs[i].identities.max_flux_residual();
            const double h0 = res.runs[i - 1].config.dr, h1 = res.runs[i].config.dr;
            if (e0 > 0.0 && e1 > 0.0 && h0 != h1) res.flux_order[i] = std::log(e0 / e1) / std::log(h0 / h1);
        }

    std::ostringstream os;
    os << "axis,value,alpha,r2,pass,max_energy_drift,max_flux_residual,max_pohozaev_relative,H_violation,"
          "max_cone_ratio,flux_order\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const RunReport& r = res.runs[i];
        os << axis << ',' << values[i] << ',' << detail::g17(r.verdict.alpha) << ',' << detail::g17(r.verdict.r2)
           << ',' << (r.pass() ? 1 : 0) << ',' << detail::g17(r.max_energy_drift) << ','
           << detail::g17(r.identities.max_flux_residual()) << ',' << detail::g17(r.identities.max_pohozaev_relative())
           << ',' << detail::g17(r.identities.H_violation) << ',' << detail::g17(r.identities.max_cone_ratio) << ',';
        if (std::isfinite(res.flux_order[i])) os << detail::g17(res.flux_order[i]);
        os << '\n';
    }
    fs::create_directories(base.output_dir);
    detail::write_text(fs::path(base.output_dir) / "sweep.csv", os.str());
    return res;
}

}  // namespace kgdecay::harness
