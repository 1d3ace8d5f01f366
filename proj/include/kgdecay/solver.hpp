#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgdecay/error.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/profile.hpp"

namespace kgdecay {

enum class Scheme { leapfrog, discrete_gradient };

inline const char* to_string(Scheme s) {
    return s == Scheme::leapfrog ? "leapfrog" : "discrete_gradient";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "leapfrog") return Scheme::leapfrog;
    if (s == "discrete_gradient") return Scheme::discrete_gradient;
    throw Error(ErrorKind::InvalidArgument, "unknown scheme '" + s + "'");
}

struct SchemeConfig {
    Scheme scheme = Scheme::discrete_gradient;
    double cfl = 0.9;
    double newton_tol = 1e-14;
    int newton_max_iter = 50;

    void validate() const {
        if (!(cfl > 0.0 && cfl <= 1.0)) throw Error(ErrorKind::InvalidArgument, "cfl must lie in (0, 1]");
        if (!(newton_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "newton_tol must be positive");
        if (newton_max_iter < 1) throw Error(ErrorKind::InvalidArgument, "newton_max_iter must be positive");
    }
    bool operator==(const SchemeConfig&) const = default;
};

inline double cfl_limit(const RadialGrid& grid, double cfl) { return cfl * grid.dr; }

/// Forcing added to the right side of the w-equation; fills `out` at time t.
using Source = std::function<void(double t, const RadialGrid& grid, std::span<double> out)>;

/// Three-level time stepper. Holds w at levels n-1, n, n+1 so that the
/// synchronous velocity (w^{n+1} - w^{n-1}) / (2 dt) is always available.
/// The discrete-gradient variant averages the mass and quintic forces between
/// levels n-1 and n+1 and conserves energy_half() exactly (up to Newton
/// tolerance). The outer node sees a mirrored neighbour, which keeps constant
/// and period-two tails stationary and enters the energy with half weight.
class Integrator {
public:
    Integrator(const RadialState& st, const CutoffPair& cut, const SchemeConfig& cfg, double dt,
               Source source = {})
        : grid_(st.grid), cut_(&cut), cfg_(cfg), dt_(dt), t0_(st.t), source_(std::move(source)) {
        cfg_.validate();
        if (!(dt > 0.0) || dt > cfl_limit(grid_, cfg_.cfl) * (1.0 + 1e-12))
            throw Error(ErrorKind::InvalidArgument, "time step violates the CFL limit");
        if (cut.chi1.size() != grid_.size()) throw Error(ErrorKind::InvalidArgument, "cutoffs do not match grid");
        st.validate();
        const std::size_t n = grid_.size();
        prev_.assign(n, 0.0);
        cur_ = st.w;
        next_.assign(n, 0.0);
        force_.assign(n, 0.0);
        active_ = 1;
        for (std::size_t i = 0; i < n; ++i)
            if (cut.chi1[i] != 0.0 || cut.quintic[i] != 0.0) active_ = i + 1;
        initialize(st.v);
    }

    double dt() const { return dt_; }
    long step_index() const { return level_; }
    double time() const { return t0_ + dt_ * static_cast<double>(level_); }
    const RadialGrid& grid() const { return grid_; }
    std::span<const double> w() const { return cur_; }
    std::span<const double> w_next() const { return next_; }
    std::span<const double> w_prev() const { return prev_; }

    double velocity(std::size_t i) const { return (next_[i] - prev_[i]) / (2.0 * dt_); }

    RadialState state() const {
        RadialState s(grid_, time());
        s.w = cur_;
        for (std::size_t i = 1; i < cur_.size(); ++i) s.v[i] = velocity(i);
        return s;
    }

    /// Conserved discrete energy between levels n and n+1.
    double energy_half() const {
        const double dr = grid_.dr;
        const std::size_t n = cur_.size();
        double kin = 0.0, pot = 0.0, grad = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = (next_[i] - cur_[i]) / dt_;
            kin += (i + 1 == n ? 0.25 : 0.5) * p * p;
        }
        for (std::size_t i = 0; i + 1 < n; ++i)
            grad += 0.5 * (cur_[i + 1] - cur_[i]) * (next_[i + 1] - next_[i]) / (dr * dr);
        const bool dg = cfg_.scheme == Scheme::discrete_gradient;
        for (std::size_t i = 0; i < active_; ++i) {
            const double a = next_[i], b = cur_[i];
            const double c1 = cut_->chi1[i], c = cut_->quintic[i];
            const double mass = dg ? 0.25 * c1 * (a * a + b * b) : 0.5 * c1 * a * b;
            pot += mass + c * (a * a * a * a * a * a + b * b * b * b * b * b) / 12.0;
        }
        return detail::four_pi * dr * (kin + grad + pot);
    }

    /// Moves from level n to level n+1.
    void advance() {
        std::swap(prev_, cur_);
        std::swap(cur_, next_);
        ++level_;
        compute_next();
    }

private:
    static double poly5(double a, double b) {
        const double a2 = a * a, b2 = b * b;
        return a2 * a2 * a + a2 * a2 * b + a2 * a * b2 + a2 * b2 * b + a * b2 * b2 + b2 * b2 * b;
    }
    static double poly5_da(double a, double b) {
        const double a2 = a * a, b2 = b * b;
        return 5.0 * a2 * a2 + 4.0 * a2 * a * b + 3.0 * a2 * b2 + 2.0 * a * b2 * b + b2 * b2;
    }

    double laplacian(std::size_t i) const {
        if (i + 1 == cur_.size()) return 2.0 * (cur_[i - 1] - cur_[i]) / (grid_.dr * grid_.dr);
        return (cur_[i + 1] - 2.0 * cur_[i] + cur_[i - 1]) / (grid_.dr * grid_.dr);
    }

    void fill_force(double t) {
        if (!source_) return;
        std::fill(force_.begin(), force_.end(), 0.0);
        source_(t, grid_, force_);
        force_[0] = 0.0;
    }

    [[noreturn]] void newton_failure(std::size_t i, int it) const {
        throw Error(ErrorKind::NewtonDiverged,
                    "Newton iteration did not converge at t=" + std::to_string(time()),
                    static_cast<int>(i), it);
    }

    void initialize(const std::vector<double>& v) {
        const std::size_t n = cur_.size();
        const double h = 0.5 * dt_ * dt_;
        fill_force(time());
        for (std::size_t i = 1; i < n; ++i) {
            const double w = cur_[i];
            const double dv = dt_ * v[i];
            const double rhs = laplacian(i) + force_[i];
            const double c1 = cut_->chi1[i], c = cut_->quintic[i];
            double z = 0.0;
            if (cfg_.scheme == Scheme::leapfrog || i >= active_) {
                z = h * (rhs - c1 * w - c * w * w * w * w * w);
            } else if (c == 0.0) {
                z = h * (rhs - c1 * w) / (1.0 + h * c1);
            } else {
                z = h * (rhs - c1 * w - c * w * w * w * w * w);
                int it = 0;
                for (;; ++it) {
                    if (it >= cfg_.newton_max_iter) newton_failure(i, it);
                    const double a = w + dv + z, b = w - dv + z;
                    const double g = 0.5 * c1 * (a + b) + c * poly5(a, b) / 6.0;
                    const double dg = c1 + c * (poly5_da(a, b) + poly5_da(b, a)) / 6.0;
                    const double res = z - h * (rhs - g);
                    const double dz = -res / (1.0 + h * dg);
                    z += dz;
                    if (!std::isfinite(z)) throw Error(ErrorKind::NonFinite, "overflow in start-up", static_cast<int>(i));
                    if (std::abs(dz) <= cfg_.newton_tol * (std::abs(w) + std::abs(dv)) || dz == 0.0) break;
                }
            }
            prev_[i] = w - dv + z;
            next_[i] = w + dv + z;
        }
        prev_[0] = next_[0] = 0.0;
    }

    void compute_next() {
        const std::size_t n = cur_.size();
        const double d2 = dt_ * dt_;
        fill_force(time());
        const bool dg = cfg_.scheme == Scheme::discrete_gradient;
        for (std::size_t i = 1; i < n; ++i) {
            const double w = cur_[i], b = prev_[i];
            const double base = 2.0 * w - b + d2 * (laplacian(i) + force_[i]);
            if (i >= active_) {
                next_[i] = base;
                continue;
            }
            const double c1 = cut_->chi1[i], c = cut_->quintic[i];
            if (!dg) {
                next_[i] = base - d2 * (c1 * w + c * w * w * w * w * w);
            } else if (c == 0.0) {
                next_[i] = (base - 0.5 * d2 * c1 * b) / (1.0 + 0.5 * d2 * c1);
            } else {
                double x = base - d2 * (c1 * w + c * w * w * w * w * w);
                for (int it = 0;; ++it) {
                    if (it >= cfg_.newton_max_iter) newton_failure(i, it);
                    const double res = x - base + d2 * (0.5 * c1 * (x + b) + c * poly5(x, b) / 6.0);
                    const double jac = 1.0 + d2 * (0.5 * c1 + c * poly5_da(x, b) / 6.0);
                    const double dx = -res / jac;
                    x += dx;
                    if (!std::isfinite(x)) break;
                    if (std::abs(dx) <= cfg_.newton_tol * std::abs(x) || dx == 0.0) break;
                }
                next_[i] = x;
            }
            if (!std::isfinite(next_[i]))
                throw Error(ErrorKind::NonFinite, "overflow at t=" + std::to_string(time()), static_cast<int>(i));
        }
        next_[0] = 0.0;
    }

    RadialGrid grid_;
    const CutoffPair* cut_;
    SchemeConfig cfg_;
    double dt_;
    double t0_;
    long level_ = 0;
    Source source_;
    std::size_t active_ = 1;
    std::vector<double> prev_, cur_, next_, force_;
};

/// One step of size dt from `state`.
inline RadialState step(const RadialState& state, const CutoffPair& cutoffs, const SchemeConfig& cfg, double dt,
                        const Source& source = {}) {
    Integrator it(state, cutoffs, cfg, dt, source);
    it.advance();
    return it.state();
}

/// Stored run: snapshots at a fixed stride, plus fields along the diagonal r = t.
struct Trajectory {
    RadialGrid grid;
    SchemeConfig cfg;
    double dt = 0.0;
    double stride = 0.0;
    std::vector<double> times;
    std::vector<RadialState> states;

    std::vector<double> trace_t, trace_w, trace_v, trace_dw;

    /// Discrete energy at the half levels t_n + dt/2.
    std::vector<double> energy_t, energy;

    double max_energy_drift() const {
        if (energy.empty() || energy.front() == 0.0) return 0.0;
        double m = 0.0;
        for (double e : energy) m = std::max(m, std::abs(e - energy.front()) / std::abs(energy.front()));
        return m;
    }

    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }

    /// Index of the snapshot at time t, or -1.
    long find(double t) const {
        const double tol = 1e-9 * std::max(1.0, std::abs(t));
        auto it = std::lower_bound(times.begin(), times.end(), t - tol);
        if (it != times.end() && std::abs(*it - t) <= tol) return it - times.begin();
        return -1;
    }

    const RadialState& at(double t) const {
        const long i = find(t);
        if (i < 0) throw Error(ErrorKind::NoSnapshot, "no snapshot at t=" + std::to_string(t));
        return states[static_cast<std::size_t>(i)];
    }

    /// Linear interpolation in time between bracketing snapshots.
    RadialState interpolate(double t) const {
        const long i = find(t);
        if (i >= 0) return states[static_cast<std::size_t>(i)];
        if (times.empty() || t < times.front() || t > times.back())
            throw Error(ErrorKind::NoSnapshot, "t=" + std::to_string(t) + " outside the stored run");
        auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
        const std::size_t lo = hi - 1;
        const double th = (t - times[lo]) / (times[hi] - times[lo]);
        RadialState s = (1.0 - th) * states[lo] + th * states[hi];
        s.t = t;
        return s;
    }

    /// Largest time reached by the diagonal trace.
    double trace_end() const { return trace_t.empty() ? -1.0 : trace_t.back(); }
};

struct EvolveOptions {
    /// Fixed time step; 0 selects one from the CFL number.
    double dt = 0.0;
    Source source;
    bool record_trace = true;
    bool record_energy = true;
};

using Observer = std::function<void(const Integrator&)>;

namespace detail {

inline double select_dt(const RadialGrid& grid, const SchemeConfig& cfg, double T, double stride, double fixed) {
    const double h = cfl_limit(grid, cfg.cfl);
    if (fixed > 0.0) return fixed;
    if (stride > 0.0) return stride / std::ceil(stride / h - 1e-9);
    if (T > 0.0) return T / std::ceil(T / h - 1e-9);
    return h;
}

inline long count_steps(double span, double dt) {
    const double x = span / dt;
    const double xr = std::round(x);
    if (std::abs(x - xr) > 1e-6 * std::max(1.0, x))
        throw Error(ErrorKind::InvalidArgument, "time span is not a multiple of the step");
    return static_cast<long>(xr);
}

inline void record_trace(const Integrator& it, Trajectory& tr) {
    const double t = it.time();
    const RadialGrid& g = it.grid();
    if (t > g.r_max + 1e-12) return;
    const double x = t / g.dr;
    auto j = static_cast<std::size_t>(std::floor(x));
    if (j >= g.size() - 1) j = g.size() - 2;
    const double th = x - static_cast<double>(j);
    auto w = it.w();
    auto deriv = [&](std::size_t i) {
        if (i == 0) return w[1] / g.dr;
        if (i + 1 == w.size()) return 0.0;
        return (w[i + 1] - w[i - 1]) / (2.0 * g.dr);
    };
    tr.trace_t.push_back(t);
    tr.trace_w.push_back((1.0 - th) * w[j] + th * w[j + 1]);
    tr.trace_v.push_back((1.0 - th) * it.velocity(j) + th * it.velocity(j + 1));
    tr.trace_dw.push_back((1.0 - th) * deriv(j) + th * deriv(j + 1));
}

}  // namespace detail

/// Evolves over [state.t, state.t + T]. With stride > 0 the step is chosen to
/// divide the stride, T must be a multiple of it, and a snapshot is stored at
/// every multiple; otherwise only the end points are stored.
inline Trajectory evolve(const RadialState& state, const CutoffPair& cutoffs, const SchemeConfig& cfg, double T,
                         const std::vector<Observer>& observers = {}, double snapshot_stride = 0.0,
                         const EvolveOptions& opts = {}) {
    if (T < 0.0) throw Error(ErrorKind::InvalidArgument, "negative evolution time");
    Trajectory tr;
    tr.grid = state.grid;
    tr.cfg = cfg;
    tr.stride = snapshot_stride;
    const double dt = detail::select_dt(state.grid, cfg, T, snapshot_stride, opts.dt);
    tr.dt = dt;
    const long nsteps = T > 0.0 ? detail::count_steps(T, dt) : 0;
    long per_snap = nsteps;
    if (snapshot_stride > 0.0) {
        per_snap = detail::count_steps(snapshot_stride, dt);
        if (nsteps % std::max(per_snap, 1L) != 0)
            throw Error(ErrorKind::InvalidArgument, "T is not a multiple of the snapshot stride");
    }
    Integrator it(state, cutoffs, cfg, dt, opts.source);
    auto visit = [&] {
        for (const auto& ob : observers) ob(it);
        if (opts.record_trace) detail::record_trace(it, tr);
        if (opts.record_energy) {
            tr.energy_t.push_back(it.time() + 0.5 * dt);
            tr.energy.push_back(it.energy_half());
        }
        const long k = it.step_index();
        if (k == nsteps || (per_snap > 0 && k % per_snap == 0)) {
            tr.times.push_back(it.time());
            tr.states.push_back(it.state());
        }
    };
    visit();
    for (long k = 0; k < nsteps; ++k) {
        it.advance();
        visit();
    }
    return tr;
}

/// Free evolution by t (either sign) through the translation representation.
inline RadialState free_wave_exact(const RadialState& state, double t) {
    return from_profile(shift(to_profile(state), t), state.t + t);
}

}  // namespace kgdecay
