#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kgdecay/analysis.hpp"
#include "kgdecay/energy.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/solver.hpp"

using namespace kgdecay;

namespace {

SchemeConfig exact_cfl() {
    SchemeConfig c;
    c.cfl = 1.0;
    return c;
}

struct StoredRun {
    Trajectory tr;
    CutoffPair cut;
};

StoredRun localized(double dr, double a1, double a2, double T, double stride, double amp = 1.5, double r_max = 0.0) {
    const auto g = RadialGrid::from_spacing(r_max > 0.0 ? r_max : RadialGrid::min_radius(1.0, T, 1.0, dr), dr);
    auto cut = make_cutoff_pair(1.0, a1, a2, g);
    EvolveOptions o;
    o.record_trace = false;
    Trajectory tr = evolve(make_initial_data({DataKind::gaussian_bump, 0.0, 0.5, amp, 1.0, 0}, g), cut, exact_cfl(), T,
                           {}, stride, o);
    return {std::move(tr), std::move(cut)};
}

std::vector<double> local_series(const StoredRun& r, double rho) {
    std::vector<double> out;
    for (const auto& s : r.tr.states) out.push_back(local_energy(s, r.cut, rho));
    return out;
}

}  // namespace

TEST(FitDecay, ExactExponentialAndPolynomial) {
    std::vector<double> t, v;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(0.1 * i);
        v.push_back(std::exp(-0.5 * t.back()));
    }
    const DecayFit e = fit_decay(t, v, DecayModel::exponential, 0.0, 10.0);
    EXPECT_NEAR(e.rate, 0.5, 1e-10);
    EXPECT_NEAR(e.r_squared, 1.0, 1e-10);
    EXPECT_NEAR(e.C, 1.0, 1e-10);
    t.clear();
    v.clear();
    for (int i = 1; i <= 100; ++i) {
        t.push_back(i);
        v.push_back(std::pow(i, -3.0));
    }
    const DecayFit p = fit_decay(t, v, DecayModel::polynomial, 1.0, 100.0);
    EXPECT_NEAR(p.rate, 3.0, 1e-10);
    EXPECT_NEAR(p.r_squared, 1.0, 1e-10);
}

TEST(FitDecay, RecoversRandomParameters) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> rate(0.05, 4.0), amp(0.01, 100.0);
    for (int k = 0; k < 100; ++k) {
        const double a = rate(rng), C = amp(rng);
        const auto model = k % 2 ? DecayModel::polynomial : DecayModel::exponential;
        std::vector<double> t, v;
        for (int i = 1; i <= 60; ++i) {
            t.push_back(0.25 * i);
            v.push_back(model == DecayModel::exponential ? C * std::exp(-a * t.back()) : C * std::pow(t.back(), -a));
        }
        const DecayFit f = fit_decay(t, v, model, t.front(), t.back());
        EXPECT_NEAR(f.rate, a, 1e-8 * a);
        EXPECT_NEAR(f.C, C, 1e-8 * C);
    }
}

TEST(FitDecay, Errors) {
    const std::vector<double> t{0, 1, 2, 3, 4, 5, 6}, flat(7, 2.0);
    try {
        fit_decay(t, flat, DecayModel::exponential, 0.0, 6.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSeries);
    }
    try {
        fit_decay(t, flat, DecayModel::exponential, 0.0, 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewPoints);
    }
}

TEST(Verdict, EnvelopeHoldsAtEverySample) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<double> t, v;
    for (int i = 0; i <= 300; ++i) {
        t.push_back(0.1 * i);
        v.push_back(std::exp(-0.7 * t.back() + noise(rng)));
    }
    const Theorem1Verdict vd = theorem1_verdict(t, v, 2.0, 5.0, 30.0);
    EXPECT_TRUE(vd.envelope_ok);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_LE(v[i], vd.C * std::exp(-vd.alpha * t[i]) * 2.0 * (1.0 + 1e-12));
    EXPECT_NEAR(vd.alpha, 0.7, 0.05);
}

TEST(Verdict, FreeWaveLeavesTheBall) {
    const StoredRun r = localized(1.0 / 256.0, 0.0, 0.0, 6.0, 0.0625, 1.5, 8.0);
    const auto E_R = local_series(r, 1.0);
    const Theorem1Verdict vd = theorem1_verdict(r.tr.times, E_R, E_R.front(), 3.0, 6.0);
    EXPECT_TRUE(vd.degenerate_fast);
    EXPECT_TRUE(vd.pass);
}

TEST(Verdict, LocalizedRunsDecay) {
    for (double a2 : {0.0, 1.0}) {
        const StoredRun r = localized(1.0 / 128.0, 1.0, a2, 30.0, 0.125);
        const auto E_R = local_series(r, 1.0);
        const Theorem1Verdict vd = theorem1_verdict(r.tr.times, E_R, global_energy(r.tr.states.front(), r.cut));
        EXPECT_GT(vd.alpha, 0.0) << "a2=" << a2;
        EXPECT_GE(vd.r2, 0.95) << "a2=" << a2;
        EXPECT_TRUE(vd.pass) << "a2=" << a2;
    }
}

TEST(Duhamel, LinearCaseIsSelfConsistent) {
    const StoredRun r = localized(1.0 / 128.0, 1.0, 0.0, 1.0, 1.0 / 32.0, 1.5, 6.0);
    EXPECT_LE(duhamel_residual(r.tr, r.cut, exact_cfl(), 1.0), 1e-6);
}

TEST(Duhamel, NonlinearResidualConvergesAndScalesQuintically) {
    std::vector<double> res;
    for (int k : {6, 7, 8}) {
        const double dr = std::ldexp(1.0, -k);
        const StoredRun r = localized(dr, 1.0, 1.0, 1.0, 2.0 * dr, 1.5, 6.0);
        res.push_back(duhamel_residual(r.tr, r.cut, exact_cfl(), 1.0));
    }
    EXPECT_GE(std::log2(res[0] / res[1]), 1.0);
    EXPECT_GE(std::log2(res[1] / res[2]), 1.0);

    const double dr = 1.0 / 128.0;
    const StoredRun big = localized(dr, 1.0, 1.0, 1.0, 2.0 * dr, 0.4, 6.0);
    const StoredRun half = localized(dr, 1.0, 1.0, 1.0, 2.0 * dr, 0.2, 6.0);
    auto absolute = [](const StoredRun& r) {
        return duhamel_residual(r.tr, r.cut, exact_cfl(), 1.0) * h_norm(r.tr.states.front());
    };
    EXPECT_NEAR(std::log2(absolute(big) / absolute(half)), 5.0, 0.5);

    const StoredRun sparse = localized(dr, 1.0, 1.0, 1.0, 0.125, 1.5, 6.0);
    try {
        duhamel_residual(sparse.tr, sparse.cut, exact_cfl(), 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SnapshotsTooSparse);
    }
}

TEST(Gronwall, ZeroDataGivesTrivialReport) {
    const StoredRun r = localized(1.0 / 64.0, 1.0, 1.0, 4.0, 0.125, 0.0);
    const GronwallReport rep = gronwall_chain(r.tr, r.cut, exact_cfl(), {});
    EXPECT_TRUE(rep.threshold_reached);
    EXPECT_EQ(rep.T_threshold, 0.0);
    for (double f : rep.f_series) EXPECT_EQ(f, 0.0);
    for (double g : rep.g_series) EXPECT_EQ(g, 0.0);
    EXPECT_EQ(rep.C_fit, 0.0);
    EXPECT_TRUE(rep.rate_ok);
}

TEST(Gronwall, ThresholdNotReachedIsReported) {
    const StoredRun r = localized(1.0 / 64.0, 1.0, 1.0, 3.0, 0.125);
    GronwallOptions o;
    o.epsilon = 1e-12;
    const GronwallReport rep = gronwall_chain(r.tr, r.cut, exact_cfl(), o);
    EXPECT_FALSE(rep.threshold_reached);
    EXPECT_GT(rep.epsilon_min, 1e-12);
}

TEST(Gronwall, ChainOnNonlinearRun) {
    const StoredRun lin = localized(1.0 / 128.0, 1.0, 0.0, 30.0, 0.125);
    const auto E_R = local_series(lin, 1.0);
    const double alpha = theorem1_verdict(lin.tr.times, E_R, global_energy(lin.tr.states.front(), lin.cut)).alpha;

    const StoredRun r = localized(1.0 / 128.0, 1.0, 1.0, 20.0, 0.125);
    GronwallOptions o;
    o.beta = 0.5 * alpha;
    const GronwallReport rep = gronwall_chain(r.tr, r.cut, exact_cfl(), o);
    ASSERT_TRUE(rep.threshold_reached);
    EXPECT_LE(rep.max_violation, 1e-3);
    EXPECT_LT(rep.fitted_rate, 0.0);
    EXPECT_GE(rep.r_squared, 0.9);
    const double E0 = global_energy(r.tr.states.front(), r.cut);
    EXPECT_LE(rep.max_increase, 1e-6 * std::sqrt(E0));
}
