// Command line front end: simulate, identity checks, scattering suite,
// space-time norms, decay fits and parameter sweeps.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgdecay/harness/config.hpp"
#include "kgdecay/harness/run.hpp"
#include "kgdecay/harness/suites.hpp"
#include "kgdecay/kgdecay.hpp"

namespace {

using namespace kgdecay;
using namespace kgdecay::harness;
using ojson = nlohmann::ordered_json;

constexpr int exit_pass = 0;
constexpr int exit_error = 1;
constexpr int exit_fail = 2;

std::pair<double, double> parse_pair(const std::string& s, const char* what) {
    const auto parts = harness::detail::split(s, ':');
    if (parts.size() != 2) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": expected a:b, got '" + s + "'");
    auto val = [&](const std::string& x) -> double {
        if (x == "inf" || x == "infinity") return INFINITY;
        return harness::detail::to_double(what, x);
    };
    return {val(parts[0]), val(parts[1])};
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& s, const char* what) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : harness::detail::split(s, ',')) out.push_back(parse_pair(p, what));
    return out;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& p : harness::detail::split(s, ',')) out.push_back(harness::detail::to_double(what, p));
    return out;
}

void print_run(const RunReport& r) {
    std::printf("%s: E0=%.10g drift=%.3e ", r.config.name.c_str(), r.E0, r.max_energy_drift);
    if (r.verdict.degenerate_fast)
        std::printf("decay faster than exponential");
    else
        std::printf("alpha=%.6g r2=%.6f C=%.4g", r.verdict.alpha, r.verdict.r2, r.verdict.C);
    std::printf(" -> %s (%s)\n", r.pass() ? "pass" : "fail", r.config.output_dir.c_str());
}

int cmd_simulate(const std::string& path) {
    const ScenarioConfig cfg = load(path);
    bool ok = true;
    for (const auto& r : run_seeds(cfg)) {
        print_run(r);
        ok = ok && r.pass();
    }
    return ok ? exit_pass : exit_fail;
}

int cmd_verify(const std::string& path) {
    const ScenarioConfig cfg = load(path);
    const RunReport r = run_scenario(seeded(cfg, cfg.seeds.front()));
    ojson j;
    j["schema_version"] = schema_version;
    j["name"] = cfg.name;
    j["series"] = "series.csv";
    const ojson id = harness::detail::identities_json(r.identities);
    for (auto it = id.begin(); it != id.end(); ++it) j[it.key()] = it.value();
    const auto out = std::filesystem::path(cfg.output_dir) / "identities.json";
    harness::detail::write_text(out, j.dump(2) + "\n");
    std::printf("flux max relative %.3e, multiplier max relative %.3e, H violation %.3e, sextic bound violation %.3e, "
                "max cone ratio %.4g -> %s (%s)\n",
                r.identities.max_flux_relative(), r.identities.max_pohozaev_relative(), r.identities.H_violation,
                r.identities.bound_violation, r.identities.max_cone_ratio, r.identities.ok() ? "pass" : "fail",
                out.string().c_str());
    return r.identities.ok() ? exit_pass : exit_fail;
}

int cmd_lax_phillips(const std::string& path, double R, const std::string& times, int ensemble, long long seed,
                     const std::vector<std::string>& checks) {
    ScenarioConfig cfg = load(path);
    if (R > 0.0) cfg.R = R;
    const RadialGrid grid = make_grid(cfg);
    const CutoffPair cut = make_cutoffs(cfg, grid).without_quintic();
    LaxPhillipsOptions opt;
    opt.R = cfg.R;
    if (!times.empty()) opt.times = parse_list(times, "--times");
    opt.ensemble = ensemble;
    opt.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seeds.front();
    if (!checks.empty()) opt.checks = {checks.begin(), checks.end()};
    const LaxPhillipsReport rep = run_lax_phillips(grid, cut, cfg.scheme, opt);
    std::filesystem::create_directories(cfg.output_dir);
    const auto out = std::filesystem::path(cfg.output_dir) / "laxphillips.json";
    harness::detail::write_text(out, rep.json.dump(2) + "\n");
    std::cout << rep.json.dump(2) << "\n";
    return rep.pass ? exit_pass : exit_fail;
}

int cmd_strichartz(const std::string& path, const std::string& pairs, const std::string& interval,
                   const std::string& tails) {
    const ScenarioConfig base = load(path);
    const ScenarioConfig cfg = seeded(base, base.seeds.front());
    const RadialGrid grid = make_grid(cfg);
    const CutoffPair cut = make_cutoffs(cfg, grid);
    EvolveOptions eo;
    eo.record_trace = false;
    const Trajectory tr =
        evolve(make_initial_data(cfg.data, grid), cut, cfg.scheme, cfg.T_final, {}, cfg.snapshot_stride, eo);
    const auto iv = interval.empty() ? std::pair<double, double>{0.0, cfg.T_final} : parse_pair(interval, "--interval");
    const auto rows = strichartz_table(tr, parse_pairs(pairs, "--pairs"), iv,
                                       tails.empty() ? std::vector<std::pair<double, double>>{} : parse_pairs(tails, "--tails"));
    std::filesystem::create_directories(cfg.output_dir);
    std::ostringstream csv;
    csv << "q,r,t0,t1,value\n";
    ojson labels = ojson::array();
    for (const auto& r : rows) {
        csv << harness::detail::fmt(r.q) << ',' << harness::detail::fmt(r.r) << ',' << harness::detail::fmt(r.t0)
            << ',' << harness::detail::fmt(r.t1) << ',' << harness::detail::fmt(r.value) << '\n';
        labels.push_back({{"q", r.q}, {"r", r.r}, {"t0", r.t0}, {"t1", r.t1}, {"value", r.value},
                          {"label", r.admissible ? "Strichartz" : "space-time norm"}});
    }
    harness::detail::write_text(std::filesystem::path(cfg.output_dir) / "strichartz.csv", csv.str());
    ojson j = {{"schema_version", schema_version}, {"norms", labels}};
    harness::detail::write_text(std::filesystem::path(cfg.output_dir) / "strichartz.json", j.dump(2) + "\n");
    std::cout << csv.str();
    for (const auto& r : rows)
        if (!r.admissible)
            std::cerr << "note: (" << r.q << ", " << r.r << ") is not an admissible pair; reported as a plain space-time norm\n";
    return exit_pass;
}

int cmd_decay_fit(const std::string& input, const std::string& column, const std::string& model,
                  const std::string& window, const std::string& mode) {
    std::ifstream in(input);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + input + "'");
    std::string line;
    std::getline(in, line);
    const auto header = harness::detail::split(line, ',');
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<long>(i);
        return -1L;
    };
    const long ct = col("t"), cv = col(column), ce = col("E");
    if (ct < 0 || cv < 0) throw Error(ErrorKind::InvalidArgument, "input needs columns t and " + column);
    std::vector<double> t, v;
    double E0 = 1.0;
    while (std::getline(in, line)) {
        const auto f = harness::detail::split(line, ',');
        if (f.empty()) continue;
        t.push_back(harness::detail::to_double("t", f[static_cast<std::size_t>(ct)]));
        v.push_back(harness::detail::to_double(column.c_str(), f[static_cast<std::size_t>(cv)]));
        if (ce >= 0 && t.size() == 1) E0 = harness::detail::to_double("E", f[static_cast<std::size_t>(ce)]);
    }
    if (t.empty()) throw Error(ErrorKind::TooFewPoints, "empty series");
    const auto [t0, t1] = window.empty() ? std::pair<double, double>{t.front(), t.back()} : parse_pair(window, "--window");
    DecayModel m;
    if (model == "exp") m = DecayModel::exponential;
    else if (model == "poly") m = DecayModel::polynomial;
    else throw Error(ErrorKind::InvalidArgument, "--model must be exp or poly");
    if (mode != "regression" && mode != "envelope") throw Error(ErrorKind::InvalidArgument, "--mode must be regression or envelope");
    const double scale = ce >= 0 && E0 > 0.0 ? E0 : 1.0;
    const DecayFit fit = fit_decay(t, v, m, t0, t1);
    double C = fit.C / scale;
    bool envelope_ok = true;
    if (mode == "envelope") C = envelope_constant(t, v, fit, scale);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double base = m == DecayModel::exponential ? std::exp(-fit.rate * t[i]) : std::pow(t[i], -fit.rate);
        if (base > 0.0 && std::isfinite(base)) worst = std::max(worst, v[i] / (C * base * scale));
    }
    envelope_ok = worst <= 1.0 + 1e-12;
    ojson j = {{"schema_version", schema_version},
               {"model", to_string(m)},
               {"mode", mode},
               {"alpha", fit.rate},
               {"C", C},
               {"r2", fit.r_squared},
               {"envelope_ok", envelope_ok},
               {"window", {t0, t1}},
               {"n_points", fit.n_points},
               {"n_dropped", fit.n_dropped}};
    std::cout << j.dump(2) << "\n";
    const bool pass = fit.rate > 0.0 && fit.r_squared >= 0.9 && (mode == "regression" || envelope_ok);
    return pass ? exit_pass : exit_fail;
}

int cmd_sweep(const std::string& path, const std::string& axis, const std::string& values) {
    const ScenarioConfig cfg = load(path);
    const SweepResult res = sweep(cfg, axis, harness::detail::split(values, ','));
    bool ok = true;
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
        print_run(res.runs[i]);
        ok = ok && res.runs[i].pass();
    }
    std::printf("sweep table: %s\n", (std::filesystem::path(cfg.output_dir) / "sweep.csv").string().c_str());
    return ok ? exit_pass : exit_fail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localized critical Klein-Gordon decay experiments"};
    app.require_subcommand(1);

    std::string config;
    auto* simulate = app.add_subcommand("simulate", "run a scenario and write series, report and plots");
    simulate->add_option("config", config, "scenario file")->required();

    auto* verify = app.add_subcommand("verify-identities", "run a scenario and check the cone identities");
    verify->add_option("config", config, "scenario file")->required();

    double R = 0.0;
    std::string times;
    int ensemble = 100;
    long long seed = -1;
    std::vector<std::string> checks;
    auto* lp = app.add_subcommand("lax-phillips", "translation representation and scattering-operator checks");
    lp->add_option("config", config, "scenario file")->required();
    lp->add_option("--R", R, "interaction radius (overrides the config)");
    lp->add_option("--times", times, "comma separated evolution times");
    lp->add_option("--ensemble", ensemble, "number of random probes");
    lp->add_option("--seed", seed, "probe seed (defaults to the first config seed)");
    lp->add_option("--check", checks, "subset of checks")
        ->check(CLI::IsMember({"projectors", "m", "factorization", "adjoint", "decay"}));

    std::string pairs = "4:12,5:10", interval, tails;
    auto* st = app.add_subcommand("strichartz", "space-time norms of a run");
    st->add_option("config", config, "scenario file")->required();
    st->add_option("--pairs", pairs, "q1:r1,q2:r2,...");
    st->add_option("--interval", interval, "t0:t1");
    st->add_option("--tails", tails, "T:W,... tail windows [T, T+W]");

    std::string input, column = "E_R", model = "exp", window, mode = "envelope";
    auto* fit = app.add_subcommand("decay-fit", "fit a decay law to a CSV series");
    fit->add_option("--input", input, "series CSV with a t column")->required();
    fit->add_option("--column", column, "value column");
    fit->add_option("--model", model, "exp or poly");
    fit->add_option("--window", window, "t0:t1");
    fit->add_option("--mode", mode, "regression or envelope");

    std::string axis, values;
    auto* sw = app.add_subcommand("sweep", "run variants of a scenario along one config field");
    sw->add_option("config", config, "template scenario file")->required();
    sw->add_option("--axis", axis, "config field, e.g. dr or cutoffs.a2")->required();
    sw->add_option("--values", values, "comma separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_error;
    }

    try {
        if (*simulate) return cmd_simulate(config);
        if (*verify) return cmd_verify(config);
        if (*lp) return cmd_lax_phillips(config, R, times, ensemble, seed, checks);
        if (*st) return cmd_strichartz(config, pairs, interval, tails);
        if (*fit) return cmd_decay_fit(input, column, model, window, mode);
        if (*sw) return cmd_sweep(config, axis, values);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
        return exit_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_error;
    }
    return exit_error;
}
