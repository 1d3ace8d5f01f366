#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kgdecay/error.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/solver.hpp"

namespace kgdecay::harness {

struct ScenarioConfig {
    std::string name = "scenario";
    double T_final = 10.0;
    double snapshot_stride = 0.0625;
    double observation_radius = 1.0;
    double dump_stride = 5.0;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "out";

    double r_max = 16.0;
    double dr = 1.0 / 256.0;

    double R = 1.0;
    double a1 = 1.0;
    double a2 = 0.0;
    /// Optional CSV with columns r,chi1,dchi1,chi2,dchi2 on the run grid.
    std::string cutoff_table;

    DataPreset data;
    SchemeConfig scheme;

    double fit_t0 = 5.0;
    double fit_t1 = 30.0;
    double K_radius = 2.0;
    double epsilon = 1e-2;
    /// Cone windows (a, b) for the identity checks.
    std::vector<std::pair<double, double>> windows;

    bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

[[noreturn]] inline void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::ConfigInvalid, field + ": " + why);
}

inline double to_double(const std::string& field, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(s, &pos);
        if (pos != s.size()) invalid(field, "trailing characters in '" + s + "'");
        return x;
    } catch (const std::logic_error&) {
        invalid(field, "not a number: '" + s + "'");
    }
}

inline std::uint64_t to_u64(const std::string& field, const std::string& s) {
    try {
        std::size_t pos = 0;
        const auto x = std::stoull(s, &pos);
        if (pos != s.size()) invalid(field, "trailing characters in '" + s + "'");
        return x;
    } catch (const std::logic_error&) {
        invalid(field, "not an unsigned integer: '" + s + "'");
    }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace detail

/// Every recognised key, as "section.key".
inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "scenario.name", "scenario.T_final", "scenario.snapshot_stride", "scenario.observation_radius",
        "scenario.dump_stride", "scenario.seeds", "scenario.output_dir",
        "grid.r_max", "grid.dr",
        "cutoffs.R", "cutoffs.a1", "cutoffs.a2", "cutoffs.table",
        "data.kind", "data.center", "data.width", "data.amplitude", "data.support_radius", "data.seed",
        "scheme.kind", "scheme.cfl", "scheme.newton_tol", "scheme.newton_max_iter",
        "analysis.fit_t0", "analysis.fit_t1", "analysis.K_radius", "analysis.epsilon", "analysis.windows",
    };
    return keys;
}

inline boost::property_tree::ptree to_ptree(const ScenarioConfig& c) {
    using detail::fmt;
    boost::property_tree::ptree pt;
    pt.put("scenario.name", c.name);
    pt.put("scenario.T_final", fmt(c.T_final));
    pt.put("scenario.snapshot_stride", fmt(c.snapshot_stride));
    pt.put("scenario.observation_radius", fmt(c.observation_radius));
    pt.put("scenario.dump_stride", fmt(c.dump_stride));
    std::string seeds;
    for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
    pt.put("scenario.seeds", seeds);
    pt.put("scenario.output_dir", c.output_dir);
    pt.put("grid.r_max", fmt(c.r_max));
    pt.put("grid.dr", fmt(c.dr));
    pt.put("cutoffs.R", fmt(c.R));
    pt.put("cutoffs.a1", fmt(c.a1));
    pt.put("cutoffs.a2", fmt(c.a2));
    if (!c.cutoff_table.empty()) pt.put("cutoffs.table", c.cutoff_table);
    pt.put("data.kind", to_string(c.data.kind));
    pt.put("data.center", fmt(c.data.center));
    pt.put("data.width", fmt(c.data.width));
    pt.put("data.amplitude", fmt(c.data.amplitude));
    pt.put("data.support_radius", fmt(c.data.support_radius));
    pt.put("data.seed", std::to_string(c.data.seed));
    pt.put("scheme.kind", to_string(c.scheme.scheme));
    pt.put("scheme.cfl", fmt(c.scheme.cfl));
    pt.put("scheme.newton_tol", fmt(c.scheme.newton_tol));
    pt.put("scheme.newton_max_iter", std::to_string(c.scheme.newton_max_iter));
    pt.put("analysis.fit_t0", fmt(c.fit_t0));
    pt.put("analysis.fit_t1", fmt(c.fit_t1));
    pt.put("analysis.K_radius", fmt(c.K_radius));
    pt.put("analysis.epsilon", fmt(c.epsilon));
    std::string win;
    for (std::size_t i = 0; i < c.windows.size(); ++i)
        win += (i ? "," : "") + fmt(c.windows[i].first) + ":" + fmt(c.windows[i].second);
    pt.put("analysis.windows", win);
    return pt;
}

inline std::string serialize(const ScenarioConfig& c) {
    std::ostringstream os;
    boost::property_tree::write_ini(os, to_ptree(c));
    return os.str();
}

/// Checks the sizing rule and parameter ranges.
inline void validate(const ScenarioConfig& c) {
    using detail::invalid;
    if (c.name.empty()) invalid("scenario.name", "must not be empty");
    if (!(c.T_final >= 0.0)) invalid("scenario.T_final", "must be nonnegative");
    if (!(c.snapshot_stride > 0.0)) invalid("scenario.snapshot_stride", "must be positive");
    if (!(c.observation_radius > 0.0)) invalid("scenario.observation_radius", "must be positive");
    if (!(c.dump_stride > 0.0)) invalid("scenario.dump_stride", "must be positive");
    if (c.seeds.empty()) invalid("scenario.seeds", "needs at least one seed");
    if (c.output_dir.empty()) invalid("scenario.output_dir", "must not be empty");
    if (!(c.dr > 0.0)) invalid("grid.dr", "must be positive");
    if (!(c.R > 0.0)) invalid("cutoffs.R", "must be positive");
    if (c.a1 < 0.0 || c.a2 < 0.0) invalid("cutoffs.a1/a2", "must be nonnegative");
    if (!(c.data.support_radius > 0.0)) invalid("data.support_radius", "must be positive");
    if (!(c.scheme.cfl > 0.0 && c.scheme.cfl <= 1.0)) invalid("scheme.cfl", "must lie in (0, 1]");
    if (!(c.scheme.newton_tol > 0.0)) invalid("scheme.newton_tol", "must be positive");
    if (c.scheme.newton_max_iter < 1) invalid("scheme.newton_max_iter", "must be positive");
    if (!(c.fit_t1 > c.fit_t0)) invalid("analysis.fit_t1", "must exceed fit_t0");
    const double r_data = std::max(c.data.support_radius, c.R);
    const double need = RadialGrid::min_radius(r_data, c.T_final, c.observation_radius, c.dr);
    if (c.r_max < need) invalid("grid.r_max", "sizing rule needs r_max >= " + detail::fmt(need));
    for (auto [a, b] : c.windows)
    {
        if (!(b > a && a > c.R) || b > c.T_final) invalid("analysis.windows", "each window needs R < a < b <= T_final");
        if (b > c.r_max - r_data)
            invalid("analysis.windows", "window end " + detail::fmt(b) + " lets the cone reach the outer wall");
    }
}

inline ScenarioConfig from_ptree(const boost::property_tree::ptree& pt) {
    using detail::invalid;
    for (const auto& [sec, body] : pt) {
        if (body.empty() && !body.data().empty()) invalid(sec, "key outside a section");
        for (const auto& [key, val] : body) {
            const std::string full = sec + "." + key;
            if (!known_keys().count(full)) invalid(full, "unknown key");
        }
    }
    ScenarioConfig c;
    auto str = [&](const char* key, std::string& out) {
        if (auto v = pt.get_optional<std::string>(key)) out = *v;
    };
    auto num = [&](const char* key, double& out) {
        if (auto v = pt.get_optional<std::string>(key)) out = detail::to_double(key, *v);
    };
    str("scenario.name", c.name);
    num("scenario.T_final", c.T_final);
    num("scenario.snapshot_stride", c.snapshot_stride);
    num("scenario.observation_radius", c.observation_radius);
    num("scenario.dump_stride", c.dump_stride);
    if (auto v = pt.get_optional<std::string>("scenario.seeds")) {
        c.seeds.clear();
        for (const auto& s : detail::split(*v, ',')) c.seeds.push_back(detail::to_u64("scenario.seeds", s));
    }
    str("scenario.output_dir", c.output_dir);
    num("grid.r_max", c.r_max);
    num("grid.dr", c.dr);
    num("cutoffs.R", c.R);
    num("cutoffs.a1", c.a1);
    num("cutoffs.a2", c.a2);
    str("cutoffs.table", c.cutoff_table);
    if (auto v = pt.get_optional<std::string>("data.kind")) {
        try {
            c.data.kind = data_kind_from_string(*v);
        } catch (const Error&) {
            invalid("data.kind", "unknown kind '" + *v + "'");
        }
    }
    num("data.center", c.data.center);
    num("data.width", c.data.width);
    num("data.amplitude", c.data.amplitude);
    num("data.support_radius", c.data.support_radius);
    if (auto v = pt.get_optional<std::string>("data.seed")) c.data.seed = detail::to_u64("data.seed", *v);
    if (auto v = pt.get_optional<std::string>("scheme.kind")) {
        try {
            c.scheme.scheme = scheme_from_string(*v);
        } catch (const Error&) {
            invalid("scheme.kind", "unknown scheme '" + *v + "'");
        }
    }
    num("scheme.cfl", c.scheme.cfl);
    num("scheme.newton_tol", c.scheme.newton_tol);
    if (auto v = pt.get_optional<std::string>("scheme.newton_max_iter"))
        c.scheme.newton_max_iter = static_cast<int>(detail::to_u64("scheme.newton_max_iter", *v));
    num("analysis.fit_t0", c.fit_t0);
    num("analysis.fit_t1", c.fit_t1);
    num("analysis.K_radius", c.K_radius);
    num("analysis.epsilon", c.epsilon);
    if (auto v = pt.get_optional<std::string>("analysis.windows")) {
        c.windows.clear();
        for (const auto& w : detail::split(*v, ',')) {
            const auto ab = detail::split(w, ':');
            if (ab.size() != 2) invalid("analysis.windows", "expected a:b, got '" + w + "'");
            c.windows.emplace_back(detail::to_double("analysis.windows", ab[0]),
                                   detail::to_double("analysis.windows", ab[1]));
        }
    }
    validate(c);
    return c;
}

inline ScenarioConfig parse(const std::string& text) {
    std::istringstream is(text);
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        detail::invalid("file", e.message());
    }
    return from_ptree(pt);
}

inline ScenarioConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::invalid("file", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

/// Copy of `c` with one field replaced; `axis` is "section.key" or a bare key
/// that names exactly one field.
inline ScenarioConfig with_field(const ScenarioConfig& c, const std::string& axis, const std::string& value) {
    std::string full;
    if (known_keys().count(axis)) {
        full = axis;
    } else {
        for (const auto& k : known_keys())
            if (k.substr(k.find('.') + 1) == axis) {
                if (!full.empty()) detail::invalid(axis, "ambiguous axis");
                full = k;
            }
    }
    if (full.empty()) detail::invalid(axis, "no such config field");
    auto pt = to_ptree(c);
    pt.put(full, value);
    return from_ptree(pt);
}

/// Builds the cutoff pair described by the config on `grid`.
inline CutoffPair make_cutoffs(const ScenarioConfig& c, const RadialGrid& grid) {
    if (c.cutoff_table.empty()) return make_cutoff_pair(c.R, c.a1, c.a2, grid);
    std::ifstream in(c.cutoff_table);
    if (!in) detail::invalid("cutoffs.table", "cannot open '" + c.cutoff_table + "'");
    std::string line;
    std::getline(in, line);
    std::vector<double> c1, d1, c2, d2;
    while (std::getline(in, line)) {
        const auto f = detail::split(line, ',');
        if (f.empty()) continue;
        if (f.size() != 5) detail::invalid("cutoffs.table", "expected r,chi1,dchi1,chi2,dchi2");
        c1.push_back(detail::to_double("cutoffs.table", f[1]));
        d1.push_back(detail::to_double("cutoffs.table", f[2]));
        c2.push_back(detail::to_double("cutoffs.table", f[3]));
        d2.push_back(detail::to_double("cutoffs.table", f[4]));
    }
    return make_tabulated_cutoff_pair(c.R, std::move(c1), std::move(d1), std::move(c2), std::move(d2), grid);
}

inline RadialGrid make_grid(const ScenarioConfig& c) { return RadialGrid::from_spacing(c.r_max, c.dr); }

}  // namespace kgdecay::harness
