#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kgdecay/energy.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/solver.hpp"
#include "kgdecay/strichartz.hpp"

using namespace kgdecay;

namespace {

constexpr double pi = std::numbers::pi;

Trajectory frozen(const RadialState& s, double T, double stride) {
    Trajectory tr{s.grid, {}, 0.0, stride, {}, {}, {}, {}, {}, {}, {}, {}};
    for (int k = 0; k * stride <= T + 1e-12; ++k) {
        RadialState c = s;
        c.t = k * stride;
        tr.times.push_back(c.t);
        tr.states.push_back(c);
    }
    return tr;
}

Trajectory localized_run(double a2, double T) {
    const double dr = 1.0 / 128.0;
    // no reflection off the outer wall before T
    const auto g = RadialGrid::from_spacing(T + 3.0, dr);
    const auto cut = make_cutoff_pair(1.0, 1.0, a2, g);
    SchemeConfig c;
    c.cfl = 1.0;
    EvolveOptions o;
    o.record_trace = false;
    return evolve(make_initial_data({DataKind::gaussian_bump, 0.0, 0.5, 1.5, 1.0, 0}, g), cut, c, T, {}, 1.0 / 32.0, o);
}

}  // namespace

TEST(SpatialNorm, ZeroAndGaussianOracle) {
    const auto g = RadialGrid::from_spacing(8.0, std::ldexp(1.0, -10));
    RadialState s(g);
    EXPECT_EQ(spatial_norm(s, 2.0), 0.0);
    EXPECT_EQ(spatial_norm(s, INFINITY), 0.0);
    for (int i = 0; i < g.n; ++i) s.w[i] = g.r(i) * std::exp(-g.r(i) * g.r(i));
    const double l2sq = std::pow(spatial_norm(s, 2.0), 2);
    EXPECT_LE(std::abs(l2sq - std::pow(pi / 2.0, 1.5)) / std::pow(pi / 2.0, 1.5), 1e-6);
    // sup sits at the origin, read off the first node
    EXPECT_NEAR(spatial_norm(s, INFINITY), 1.0, 2.0 * g.dr * g.dr);
    EXPECT_THROW(spatial_norm(s, 0.5), Error);
}

TEST(SpatialNorm, SexticMatchesQuinticIntegral) {
    const auto g = RadialGrid::from_spacing(6.0, 1.0 / 256.0);
    // chi2 = 1 on B_4, which holds the data
    const std::vector<double> zero(g.size(), 0.0);
    std::vector<double> one(g.size(), 0.0);
    for (int i = 0; g.r(i) <= 4.0; ++i) one[static_cast<std::size_t>(i)] = 1.0;
    const auto cut = make_tabulated_cutoff_pair(5.0, zero, zero, one, zero, g);
    const RadialState s = make_initial_data({DataKind::gaussian_bump, 0.0, 0.5, 1.5, 1.0, 0}, g);
    EXPECT_NEAR(std::pow(spatial_norm(s, 6.0), 6.0), chi2_u6_integral(s, cut), 1e-12 * chi2_u6_integral(s, cut));
}

TEST(SpacetimeNorm, ConstantInTimeEqualsSpatialNorm) {
    const auto g = RadialGrid::from_spacing(4.0, 1.0 / 128.0);
    const RadialState s = make_initial_data({DataKind::random_band, 0.0, 0.5, 1.0, 2.0, 3}, g);
    const Trajectory tr = frozen(s, 1.0, 0.0625);
    for (double q : {1.0, 2.0, 4.0, 5.0, double(INFINITY)})
        EXPECT_NEAR(spacetime_norm(tr, q, 12.0, 0.0, 1.0).value, spatial_norm(s, 12.0), 1e-12);
}

TEST(SpacetimeNorm, NestedIntervalsAndSupremum) {
    const Trajectory tr = localized_run(1.0, 10.0);
    const double inner = spacetime_norm(tr, 4.0, 12.0, 2.0, 5.0).value;
    const double outer = spacetime_norm(tr, 4.0, 12.0, 1.0, 8.0).value;
    EXPECT_LE(inner, outer);
    // over a unit interval the time average cannot exceed the supremum
    for (double q : {1.0, 4.0, 5.0})
        EXPECT_LE(spacetime_norm(tr, q, 10.0, 3.0, 4.0).value, spacetime_norm(tr, INFINITY, 10.0, 3.0, 4.0).value);
}

TEST(SpacetimeNorm, ErrorsOnUncoveredInterval) {
    const auto g = RadialGrid::from_spacing(4.0, 1.0 / 64.0);
    const Trajectory tr = frozen(RadialState(g), 1.0, 0.0625);
    try {
        spacetime_norm(tr, 4.0, 12.0, 0.0, 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IntervalUncovered);
    }
    const Trajectory sparse = frozen(RadialState(g), 1.0, 0.25);
    EXPECT_THROW(spacetime_norm(sparse, 4.0, 12.0, 0.0, 1.0), Error);
    EXPECT_EQ(tail_norm(tr, 4.0, 12.0, 0.0, 1.0), 0.0);
}

TEST(SpacetimeNorm, LinearRunWithinEnergyBound) {
    const Trajectory tr = localized_run(0.0, 20.0);
    const auto cut = make_cutoff_pair(1.0, 1.0, 0.0, tr.grid);
    const double E0 = global_energy(tr.states.front(), cut);
    const double norm = spacetime_norm(tr, 4.0, 12.0, 0.0, 20.0).value;
    EXPECT_LE(norm, 1.1 * std::sqrt(E0));
}

TEST(TailNorm, DecreasesOnLinearRun) {
    const Trajectory tr = localized_run(0.0, 20.0);
    double prev = INFINITY;
    for (double T = 0.0; T <= 15.0; T += 5.0) {
        const double tail = tail_norm(tr, 4.0, 12.0, T, 5.0);
        EXPECT_LT(tail, prev) << "T=" << T;
        prev = tail;
    }
}

TEST(TailNorm, NonlinearTailSmallAndStable) {
    const Trajectory tr = localized_run(1.0, 20.0);
    EXPECT_LE(tail_norm(tr, 4.0, 12.0, 15.0, 5.0), 0.1 * spacetime_norm(tr, 4.0, 12.0, 0.0, 5.0).value);
    EXPECT_TRUE(std::isfinite(spacetime_norm(tr, 5.0, 10.0, 0.0, 20.0).value));
}

TEST(Bootstrap, ClosedFormValues) {
    const auto th = bootstrap_threshold(0.1, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(th.a_max, 0.25);
    EXPECT_DOUBLE_EQ(th.M0_max, 0.5);
    EXPECT_DOUBLE_EQ(th.bound, 0.2);
    EXPECT_TRUE(th.hypotheses_ok);
    const auto five = bootstrap_threshold(0.1, 1.0, 5.0);
    EXPECT_NEAR(five.a_max, 0.8 * std::pow(5.0, -0.25), 1e-15);
    EXPECT_EQ(five.hypotheses_ok, 0.1 < 0.8 * std::pow(5.0, -0.25));
    EXPECT_FALSE(bootstrap_threshold(0.3, 1.0, 2.0).hypotheses_ok);
    try {
        bootstrap_threshold(0.1, 1.0, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BadTheta);
    }
}

TEST(Bootstrap, RandomSearchFindsNoCounterexample) {
    for (double theta : {2.0, 3.0, 5.0}) {
        const auto res = bootstrap_falsify(1.0, theta, 10000, 42);
        EXPECT_EQ(res.trials, 10000);
        EXPECT_EQ(res.counterexamples, 0) << "theta=" << theta;
        EXPECT_LE(res.worst_ratio, 1.0);
        EXPECT_GT(res.worst_ratio, 0.0);
    }
}
