#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgdecay/harness/config.hpp"
#include "kgdecay/harness/run.hpp"
#include "kgdecay/harness/svg.hpp"

using namespace kgdecay;
using namespace kgdecay::harness;
namespace fs = std::filesystem;

namespace {

const fs::path presets = fs::path(KGDECAY_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "kgdecay_harness_test" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ScenarioConfig small_linear(const std::string& out) {
    ScenarioConfig c = parse(R"(
[scenario]
name=small
T_final=12
snapshot_stride=0.03125
observation_radius=1
dump_stride=4
seeds=3
output_dir=)" + out + R"(
[grid]
r_max=12
dr=0.0078125
[cutoffs]
R=1
a1=1
a2=0
[data]
kind=random_band
center=0
width=0.5
amplitude=1
support_radius=1
[scheme]
kind=discrete_gradient
cfl=1
[analysis]
fit_t0=3
fit_t1=12
windows=2:4,3:6
)");
    return c;
}

void expect_finite(const nlohmann::json& j, const std::string& path = "") {
    if (j.is_number()) {
        EXPECT_TRUE(std::isfinite(j.get<double>())) << path;
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) expect_finite(it.value(), path + "/" + it.key());
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) expect_finite(j[i], path + "/" + std::to_string(i));
    }
}

}  // namespace

TEST(Config, RoundTrip) {
    for (const auto& e : fs::directory_iterator(presets)) {
        const ScenarioConfig c = load(e.path().string());
        EXPECT_EQ(parse(serialize(c)), c) << e.path();
    }
    ScenarioConfig c = small_linear("x");
    c.windows = {{1.5, 2.25}, {3.0, 6.0}};
    c.seeds = {1, 2, 18446744073709551615ull};
    c.dr = 0.1 / 3.0;
    EXPECT_EQ(parse(serialize(c)), c);
}

TEST(Config, AllPresetsLoad) {
    for (const char* name :
         {"free-huygens", "linear-localized", "critical-nonlinear", "laxphillips-suite", "strichartz-suite"})
        EXPECT_NO_THROW(load((presets / (std::string(name) + ".ini")).string())) << name;
}

TEST(Config, UnknownKeyAndBadValuesAreRejected) {
    const std::string base = serialize(small_linear("x"));
    auto kind_of = [](const std::string& text) {
        try {
            parse(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    EXPECT_EQ(kind_of(base + "[grid]\nspacing=2\n"), ErrorKind::ConfigInvalid);
    std::string bad = base;
    bad.replace(bad.find("dr="), 3, "dr=abc;");
    EXPECT_EQ(kind_of(bad), ErrorKind::ConfigInvalid);
    try {
        parse(base + "[mystery]\nkey=1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("mystery.key"), std::string::npos);
    }
}

TEST(Config, SizingRuleAndWindowsAreValidated) {
    ScenarioConfig c = small_linear("x");
    c.r_max = 4.0;
    EXPECT_THROW(validate(c), Error);
    c = small_linear("x");
    c.windows = {{0.5, 2.0}};
    EXPECT_THROW(validate(c), Error);
    c.windows = {{2.0, 13.0}};
    EXPECT_THROW(validate(c), Error);
    c = small_linear("x");
    c.seeds.clear();
    EXPECT_THROW(validate(c), Error);
}

TEST(Config, WithField) {
    const ScenarioConfig c = small_linear("x");
    EXPECT_EQ(with_field(c, "dr", "0.015625").dr, 0.015625);
    EXPECT_EQ(with_field(c, "cutoffs.a2", "0.5").a2, 0.5);
    EXPECT_EQ(with_field(c, "a2", "0.5").a2, 0.5);
    EXPECT_THROW(with_field(c, "nonsense", "1"), Error);
    // "kind" lives in both data and scheme
    EXPECT_THROW(with_field(c, "kind", "leapfrog"), Error);
    EXPECT_THROW(with_field(c, "dr", "-1"), Error);
}

TEST(Config, TabulatedCutoffs) {
    const fs::path dir = scratch("table");
    fs::create_directories(dir);
    ScenarioConfig c = small_linear("x");
    const RadialGrid g = make_grid(c);
    const CutoffPair ref = make_cutoff_pair(c.R, 1.0, 0.5, g);
    {
        std::ofstream os(dir / "cut.csv");
        os << "r,chi1,dchi1,chi2,dchi2\n";
        for (int i = 0; i < g.n; ++i)
            os << harness::detail::fmt(g.r(i)) << ',' << harness::detail::fmt(ref.chi1[i]) << ','
               << harness::detail::fmt(ref.dchi1[i]) << ',' << harness::detail::fmt(ref.chi2[i]) << ','
               << harness::detail::fmt(ref.dchi2[i]) << '\n';
    }
    c.cutoff_table = (dir / "cut.csv").string();
    const CutoffPair tab = make_cutoffs(c, g);
    EXPECT_EQ(tab.chi1, ref.chi1);
    EXPECT_EQ(tab.chi2, ref.chi2);
}

TEST(Run, FreeHuygensPreset) {
    ScenarioConfig c = load((presets / "free-huygens.ini").string());
    c.output_dir = scratch("huygens").string();
    const RunReport r = run_scenario(c);
    EXPECT_TRUE(r.verdict.degenerate_fast);
    EXPECT_TRUE(r.pass());
    for (const auto& e : r.series)
        if (e.t > 2.0 * c.R) {
            EXPECT_LE(e.E_R, 1e-6 * r.E0) << "t=" << e.t;
        }
}

TEST(Run, DeterministicOutputs) {
    const ScenarioConfig a = small_linear(scratch("det_a").string());
    const ScenarioConfig b = small_linear(scratch("det_b").string());
    run_scenario(a);
    run_scenario(b);
    for (const char* f : {"series.csv", "snapshots.csv"}) {
        const std::string x = slurp(fs::path(a.output_dir) / f);
        EXPECT_FALSE(x.empty());
        EXPECT_EQ(x, slurp(fs::path(b.output_dir) / f)) << f;
    }
}

TEST(Run, ReportReferencesParsableFiles) {
    const ScenarioConfig c = seeded(small_linear(scratch("report").string()), 3);
    const RunReport r = run_scenario(c);
    const fs::path dir(c.output_dir);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(j["schema_version"], schema_version);
    EXPECT_EQ(parse(j["config"].get<std::string>()), c);
    EXPECT_EQ(j["provenance"]["seed"], 3);
    expect_finite(j);
    for (const auto& f : j["files"]) {
        const fs::path p = dir / f.get<std::string>();
        ASSERT_TRUE(fs::exists(p)) << p;
        const std::string text = slurp(p);
        EXPECT_FALSE(text.empty());
        if (p.extension() == ".json") {
            EXPECT_TRUE(nlohmann::json::accept(text)) << p;
        }
        if (p.extension() == ".svg") {
            EXPECT_EQ(text.rfind("<svg", 0), 0u) << p;
            EXPECT_NE(text.find("</svg>"), std::string::npos) << p;
        }
        if (p.extension() == ".csv") {
            std::istringstream in(text);
            std::string header, line;
            std::getline(in, header);
            const auto cols = std::count(header.begin(), header.end(), ',');
            while (std::getline(in, line)) ASSERT_EQ(std::count(line.begin(), line.end(), ','), cols) << p;
        }
    }
    EXPECT_EQ(slurp(dir / "series.csv").substr(0, 23), "t,E,E_R,e_cone,H,chi2_u");
    EXPECT_TRUE(r.identities.ok());
    EXPECT_GT(r.verdict.alpha, 0.0);
}

TEST(Run, SeveralSeedsGetTheirOwnDirectories) {
    ScenarioConfig c = small_linear(scratch("seeds").string());
    c.seeds = {1, 2};
    c.T_final = 4.0;
    c.fit_t0 = 1.0;
    c.fit_t1 = 4.0;
    c.windows = {{2.0, 4.0}};
    const auto runs = run_seeds(c);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "seed_1" / "report.json"));
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "seed_2" / "report.json"));
    EXPECT_NE(runs[0].E0, runs[1].E0);
}

TEST(Run, SolverErrorsCarryTheRunName) {
    ScenarioConfig c = small_linear(scratch("err").string());
    c.scheme.scheme = Scheme::leapfrog;
    c.scheme.cfl = 1.0;
    c.a2 = 1.0;
    c.data.amplitude = 1e100;
    try {
        run_scenario(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("small"), std::string::npos);
    }
}

TEST(Sweep, EmptyValuesAreRejected) {
    try {
        sweep(small_linear(scratch("empty").string()), "a2", {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
    }
}

TEST(Sweep, NonlinearityAxisAndRefinementOrder) {
    ScenarioConfig c = small_linear(scratch("sweep_a2").string());
    c.data.kind = DataKind::gaussian_bump;
    c.data.amplitude = 1.5;
    const SweepResult s = sweep(c, "a2", {"0", "0.5", "1"});
    ASSERT_EQ(s.runs.size(), 3u);
    for (const auto& r : s.runs) {
        EXPECT_TRUE(std::isfinite(r.verdict.alpha));
        EXPECT_GT(r.verdict.alpha, 0.0);
    }
    const std::string table = slurp(fs::path(c.output_dir) / "sweep.csv");
    EXPECT_EQ(table.substr(0, table.find('\n')),
              "axis,value,alpha,r2,pass,max_energy_drift,max_flux_residual,max_pohozaev_relative,H_violation,"
              "max_cone_ratio,flux_order");
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);

    ScenarioConfig f = c;
    f.output_dir = scratch("sweep_dr").string();
    f.T_final = 6.0;
    f.r_max = 8.0;
    f.fit_t0 = 2.0;
    f.fit_t1 = 6.0;
    const SweepResult d = sweep(f, "dr", {"0.015625", "0.0078125", "0.00390625"});
    ASSERT_EQ(d.flux_order.size(), 3u);
    EXPECT_TRUE(std::isnan(d.flux_order[0]));
    EXPECT_GE(d.flux_order[1], 1.0);
    EXPECT_GE(d.flux_order[2], 1.0);
}

TEST(Svg, PlotsAreWellFormed) {
    std::ostringstream line, bar;
    write_line_plot(line, "E & E_R", "t", "energy", {{"E_R", "#1f77b4", {0, 1, 2}, {1, 0.1, 0.01}, false}}, true);
    write_bar_plot(bar, "residuals", {"flux <2,4>"}, {1e-7});
    for (const std::string& s : {line.str(), bar.str()}) {
        EXPECT_EQ(s.rfind("<svg", 0), 0u);
        EXPECT_NE(s.find("</svg>"), std::string::npos);
        EXPECT_EQ(s.find(" & "), std::string::npos);
    }
}
