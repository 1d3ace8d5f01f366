#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kgdecay/detail/grid_ops.hpp"
#include "kgdecay/error.hpp"

namespace kgdecay {

/// Uniform half-line grid with node 0 at the origin.
struct RadialGrid {
    double r_max = 0.0;
    int n = 0;
    double dr = 0.0;

    RadialGrid() = default;
    RadialGrid(double r_max_, int n_) : r_max(r_max_), n(n_) {
        if (n < 16) throw Error(ErrorKind::InvalidArgument, "grid needs at least 16 nodes");
        if (!(r_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "r_max must be positive");
        dr = r_max / static_cast<double>(n - 1);
    }

    /// Grid with spacing `spacing` reaching at least `r_max`.
    static RadialGrid from_spacing(double r_max, double spacing) {
        if (!(spacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "spacing must be positive");
        const auto cells = static_cast<int>(std::ceil(r_max / spacing - 1e-9));
        RadialGrid g;
        g.n = cells + 1;
        if (g.n < 16) throw Error(ErrorKind::InvalidArgument, "grid needs at least 16 nodes");
        g.dr = spacing;
        g.r_max = spacing * cells;
        return g;
    }

    double r(int i) const { return dr * i; }
    std::size_t size() const { return static_cast<std::size_t>(n); }

    /// Smallest outer radius for which reflections off the outer wall cannot
    /// reach the observation ball before t_final.
    static double min_radius(double r_data, double t_final, double r_obs, double spacing) {
        return r_data + 0.5 * t_final + r_obs + 2.0 * spacing;
    }

    bool operator==(const RadialGrid&) const = default;
};

/// Radial Cauchy data in the rescaled variable w = r*u, v = dw/dt.
struct RadialState {
    double t = 0.0;
    std::vector<double> w;
    std::vector<double> v;
    RadialGrid grid;

    RadialState() = default;
    explicit RadialState(const RadialGrid& g, double t0 = 0.0)
        : t(t0), w(g.size(), 0.0), v(g.size(), 0.0), grid(g) {}

    /// Throws unless w[0] = v[0] = 0 and every entry is finite.
    void validate() const {
        if (w.size() != grid.size() || v.size() != grid.size())
            throw Error(ErrorKind::InvalidArgument, "state arrays do not match the grid");
        if (w[0] != 0.0 || v[0] != 0.0)
            throw Error(ErrorKind::InvalidArgument, "w and v must vanish at r = 0", 0);
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!std::isfinite(w[i]) || !std::isfinite(v[i]))
                throw Error(ErrorKind::NonFinite, "non-finite entry in state", static_cast<int>(i));
    }

    RadialState& operator+=(const RadialState& o) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] += o.w[i];
            v[i] += o.v[i];
        }
        return *this;
    }
    RadialState& operator-=(const RadialState& o) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= o.w[i];
            v[i] -= o.v[i];
        }
        return *this;
    }
    RadialState& operator*=(double a) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] *= a;
            v[i] *= a;
        }
        return *this;
    }
    friend RadialState operator+(RadialState a, const RadialState& b) { return a += b; }
    friend RadialState operator-(RadialState a, const RadialState& b) { return a -= b; }
    friend RadialState operator*(double s, RadialState a) { return a *= s; }
};

/// Sampled mass and quintic cutoffs together with their radial derivatives.
struct CutoffPair {
    double R = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    std::vector<double> chi1, chi2, dchi1, dchi2;
    /// chi2 / r^4 per node (0 at the origin); the coefficient of w^5.
    std::vector<double> quintic;

    bool linear() const {
        for (double c : chi2)
            if (c != 0.0) return false;
        return true;
    }

    /// min over nodes of (2/3)chi2 - (1/6) r dchi2, the sign of the cutoff term
    /// in the multiplier identity.
    double min_multiplier_coefficient(const RadialGrid& g) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < g.n; ++i)
            m = std::min(m, (2.0 / 3.0) * chi2[i] - (1.0 / 6.0) * g.r(i) * dchi2[i]);
        return m;
    }

    /// Same profiles with the quintic part removed.
    CutoffPair without_quintic() const {
        CutoffPair c = *this;
        c.a2 = 0.0;
        std::fill(c.chi2.begin(), c.chi2.end(), 0.0);
        std::fill(c.dchi2.begin(), c.dchi2.end(), 0.0);
        std::fill(c.quintic.begin(), c.quintic.end(), 0.0);
        return c;
    }
};

inline constexpr double cutoff_condition_tol = 1e-10;

/// Validates sampled profiles against the support and sign conditions and
/// fills the derived quintic coefficient. Throws ConditionViolated with the
/// offending node.
inline CutoffPair make_tabulated_cutoff_pair(double R, std::vector<double> chi1, std::vector<double> dchi1,
                                             std::vector<double> chi2, std::vector<double> dchi2,
                                             const RadialGrid& grid) {
    if (!(R > 0.0)) throw Error(ErrorKind::InvalidArgument, "R must be positive");
    if (R >= grid.r_max) throw Error(ErrorKind::GridTooSmall, "cutoff radius reaches the outer wall");
    const std::size_t n = grid.size();
    if (chi1.size() != n || chi2.size() != n || dchi1.size() != n || dchi2.size() != n)
        throw Error(ErrorKind::InvalidArgument, "cutoff tables do not match the grid");
    CutoffPair c;
    c.R = R;
    c.quintic.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = grid.r(static_cast<int>(i));
        const int node = static_cast<int>(i);
        if (chi1[i] < 0.0) throw Error(ErrorKind::ConditionViolated, "chi1 negative", node);
        if (chi2[i] < 0.0) throw Error(ErrorKind::ConditionViolated, "chi2 negative", node);
        if (r >= R && (chi1[i] != 0.0 || chi2[i] != 0.0 || dchi1[i] != 0.0 || dchi2[i] != 0.0))
            throw Error(ErrorKind::ConditionViolated, "support: cutoff nonzero outside B_R", node);
        if (r * dchi1[i] > 0.0)
            throw Error(ErrorKind::ConditionViolated, "mass cutoff: r*dchi1 > 0", node);
        if (r * dchi2[i] > 4.0 * chi2[i] + cutoff_condition_tol)
            throw Error(ErrorKind::ConditionViolated, "quintic cutoff: r*dchi2 > 4*chi2", node);
        if (i > 0) c.quintic[i] = chi2[i] / (r * r * r * r);
        c.a1 = std::max(c.a1, chi1[i]);
        c.a2 = std::max(c.a2, chi2[i]);
    }
    c.chi1 = std::move(chi1);
    c.chi2 = std::move(chi2);
    c.dchi1 = std::move(dchi1);
    c.dchi2 = std::move(dchi2);
    return c;
}

/// Bump-template cutoffs a*exp(1 - 1/(1 - (r/R)^2)) on r < R.
inline CutoffPair make_cutoff_pair(double R, double a1, double a2, const RadialGrid& grid) {
    if (!(R > 0.0)) throw Error(ErrorKind::InvalidArgument, "R must be positive");
    if (a1 < 0.0 || a2 < 0.0) throw Error(ErrorKind::InvalidArgument, "amplitudes must be nonnegative");
    if (R >= grid.r_max) throw Error(ErrorKind::GridTooSmall, "cutoff radius reaches the outer wall");
    const std::size_t n = grid.size();
    std::vector<double> c1(n), d1(n), c2(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.r(static_cast<int>(i)) / R;
        const double b = detail::bump(x);
        const double db = detail::bump_derivative(x) / R;
        c1[i] = a1 * b;
        d1[i] = a1 * db;
        c2[i] = a2 * b;
        d2[i] = a2 * db;
    }
    CutoffPair c = make_tabulated_cutoff_pair(R, std::move(c1), std::move(d1), std::move(c2), std::move(d2), grid);
    c.a1 = a1;
    c.a2 = a2;
    return c;
}

inline CutoffPair zero_cutoffs(const RadialGrid& grid, double R = 1.0) {
    return make_cutoff_pair(R, 0.0, 0.0, grid);
}

/// Exponent tuple for the Klein-Gordon Strichartz estimate. Use
/// `AdmissiblePair::inf` for an infinite exponent.
struct AdmissiblePair {
    static constexpr double inf = std::numeric_limits<double>::infinity();
    double q = 2.0;
    double r = 2.0;
    int n = 3;
    double theta = 0.0;
    double s = 1.0;
};

struct AdmissibilityResult {
    bool admissible = false;
    double gap_residual = 0.0;
    bool inequality_holds = false;
    bool excluded = false;
};

inline AdmissibilityResult check_admissibility(const AdmissiblePair& p) {
    auto recip = [](double x) { return std::isinf(x) ? 0.0 : 1.0 / x; };
    const double nt = p.n - 1 + p.theta;
    AdmissibilityResult res;
    res.inequality_holds = 2.0 * recip(p.q) + nt * recip(p.r) <= nt / 2.0 + 1e-12;
    res.excluded = p.q == 2.0 && std::isinf(p.r) && p.n == 3 && p.theta == 0.0;
    res.gap_residual = recip(p.q) + (p.n + p.theta) * recip(p.r) - ((p.n + p.theta) / 2.0 - p.s);
    res.admissible = res.inequality_holds && !res.excluded && std::abs(res.gap_residual) <= 1e-12;
    return res;
}

/// True if some theta on a 0.01 grid in [0,1] makes (q, r) admissible with
/// n = 3 and s = 1.
inline bool admissible_for_some_theta(double q, double r) {
    for (int k = 0; k <= 100; ++k) {
        AdmissiblePair p{q, r, 3, k / 100.0, 1.0};
        if (check_admissibility(p).admissible) return true;
    }
    return false;
}

enum class DataKind { gaussian_bump, polynomial_bump, outgoing_shell, random_band };

inline const char* to_string(DataKind k) {
    switch (k) {
        case DataKind::gaussian_bump: return "gaussian_bump";
        case DataKind::polynomial_bump: return "polynomial_bump";
        case DataKind::outgoing_shell: return "outgoing_shell";
        case DataKind::random_band: return "random_band";
    }
    return "unknown";
}

inline DataKind data_kind_from_string(const std::string& s) {
    if (s == "gaussian_bump") return DataKind::gaussian_bump;
    if (s == "polynomial_bump") return DataKind::polynomial_bump;
    if (s == "outgoing_shell") return DataKind::outgoing_shell;
    if (s == "random_band") return DataKind::random_band;
    throw Error(ErrorKind::InvalidArgument, "unknown data kind '" + s + "'");
}

struct DataPreset {
    DataKind kind = DataKind::gaussian_bump;
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
    double support_radius = 1.0;
    std::uint64_t seed = 0;

    bool operator==(const DataPreset&) const = default;
};

namespace detail {

// Smooth window equal to 1 on [0, 0.75 S] and 0 beyond S.
inline double support_taper(double r, double S) {
    return smooth_step_down((r - 0.75 * S) / (0.25 * S));
}

}  // namespace detail

/// Builds t = 0 data. For `outgoing_shell` the profile g = amplitude *
/// bump((r - center)/width) is launched as w = g, v = -g', a pure outgoing
/// wave whose representer lives on [center - width, center + width].
inline RadialState make_initial_data(const DataPreset& p, const RadialGrid& grid) {
    const double S = p.support_radius;
    if (!(S > 0.0)) throw Error(ErrorKind::InvalidArgument, "support radius must be positive");
    if (S >= grid.r_max) throw Error(ErrorKind::SupportTooLarge, "data support reaches the outer wall");
    if (!(p.width > 0.0)) throw Error(ErrorKind::InvalidArgument, "width must be positive");
    RadialState st(grid);
    const int n = grid.n;
    switch (p.kind) {
        case DataKind::gaussian_bump:
            for (int i = 1; i < n; ++i) {
                const double r = grid.r(i);
                const double x = (r - p.center) / p.width;
                st.w[i] = r * p.amplitude * std::exp(-x * x) * detail::support_taper(r, S);
            }
            break;
        case DataKind::polynomial_bump:
            for (int i = 1; i < n; ++i) {
                const double r = grid.r(i);
                const double x = (r - p.center) / p.width;
                if (std::abs(x) >= 1.0) continue;
                const double y = 1.0 - x * x;
                st.w[i] = r * p.amplitude * y * y * y * y * detail::support_taper(r, S);
            }
            break;
        case DataKind::outgoing_shell: {
            if (p.center - p.width <= 0.0 || p.center + p.width > S)
                throw Error(ErrorKind::InvalidArgument, "shell must sit inside (0, support_radius]");
            for (int i = 1; i < n; ++i) st.w[i] = p.amplitude * detail::bump((grid.r(i) - p.center) / p.width);
            // v = -w' with the grid's centered difference, so the discrete
            // incoming part vanishes exactly
            for (int i = 1; i + 1 < n; ++i) st.v[i] = -(st.w[i + 1] - st.w[i - 1]) / (2.0 * grid.dr);
            break;
        }
        case DataKind::random_band: {
            std::mt19937_64 rng(p.seed);
            std::uniform_real_distribution<double> pos(0.1 * S, 0.7 * S);
            std::uniform_real_distribution<double> wid(0.05 * S, 0.2 * S);
            std::normal_distribution<double> coef(0.0, 1.0);
            constexpr int modes = 6;
            double cu[modes], cv[modes], mu[modes], sg[modes];
            for (int m = 0; m < modes; ++m) {
                mu[m] = pos(rng);
                sg[m] = wid(rng);
                cu[m] = coef(rng);
                cv[m] = coef(rng);
            }
            for (int i = 1; i < n; ++i) {
                const double r = grid.r(i);
                double u = 0.0, ut = 0.0;
                for (int m = 0; m < modes; ++m) {
                    const double x = (r - mu[m]) / sg[m];
                    const double g = std::exp(-x * x);
                    u += cu[m] * g;
                    ut += cv[m] * g;
                }
                const double tap = detail::support_taper(r, S);
                st.w[i] = r * p.amplitude * u * tap;
                st.v[i] = r * p.amplitude * ut * tap;
            }
            break;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (grid.r(i) >= S) {
            st.w[i] = 0.0;
            st.v[i] = 0.0;
        }
    }
    return st;
}

/// Two-column CSV (r,value).
inline void write_profile_csv(std::ostream& os, const RadialGrid& grid, std::span<const double> values) {
    os << "r,value\n";
    char buf[64];
    for (int i = 0; i < grid.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", grid.r(i), values[i]);
        os << buf;
    }
}

}  // namespace kgdecay
