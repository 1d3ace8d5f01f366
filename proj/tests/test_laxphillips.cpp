#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kgdecay/laxphillips.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/profile.hpp"

using namespace kgdecay;

namespace {

constexpr double R = 1.0;

RadialGrid small_grid() { return RadialGrid::from_spacing(12.0, std::ldexp(1.0, -7)); }

double rel_diff(const RadialState& a, const RadialState& b) {
    RadialState d = a;
    d -= b;
    return h_norm(d) / std::max(h_norm(b), 1e-300);
}

}  // namespace

TEST(Profile, IsometryAndRoundTrip) {
    const auto g = small_grid();
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10; ++k) {
        const RadialState s = random_interaction_state(g, R, rng);
        const TranslationProfile p = to_profile(s);
        EXPECT_NEAR(profile_norm(p), h_norm(s), 1e-6 * h_norm(s));
        const RadialState back = from_profile(p);
        double err = 0.0;
        for (int i = 0; i < g.n; ++i) err = std::max({err, std::abs(back.w[i] - s.w[i]), std::abs(back.v[i] - s.v[i])});
        EXPECT_LE(err, 1e-8);
    }
}

TEST(Profile, ShiftIsAGroupOnGridMultiples) {
    const auto g = small_grid();
    std::mt19937_64 rng(2);
    const TranslationProfile p = to_profile(random_interaction_state(g, R, rng));
    const TranslationProfile ab = shift(shift(p, 1.5), 2.25);
    const TranslationProfile direct = shift(p, 3.75);
    for (std::size_t j = 0; j < p.k.size(); ++j) EXPECT_EQ(ab.k[j], direct.k[j]);
    const TranslationProfile back = shift(shift(p, 2.0), -2.0);
    for (std::size_t j = 0; j < p.k.size(); ++j) EXPECT_EQ(back.k[j], p.k[j]);
    EXPECT_THROW(shift(p, 13.0), Error);
}

TEST(Projectors, IdempotentAndComplementarySupports) {
    const auto g = small_grid();
    std::mt19937_64 rng(3);
    TranslationProfile p = to_profile(random_interaction_state(g, R, rng));
    p = shift(p, 2.0);  // now partly outgoing
    for (Projection which : {Projection::P_plus, Projection::P_minus}) {
        const TranslationProfile once = project(p, which, R);
        const TranslationProfile twice = project(once, which, R);
        EXPECT_EQ(once.k, twice.k);
        EXPECT_LE(profile_norm(once), profile_norm(p) * (1.0 + 1e-15));
    }
    const TranslationProfile plus = project(p, Projection::P_plus, R);
    for (std::size_t j = 0; j < p.k.size(); ++j)
        if (p.s(j) >= R) {
            EXPECT_EQ(plus.k[j], 0.0);
        }
}

TEST(Projectors, OutgoingAndIncomingSpacesAreOrthogonal) {
    const auto g = small_grid();
    std::mt19937_64 rng(4);
    for (int k = 0; k < 10; ++k) {
        const RadialState out = random_scattering_state(g, R, 3.0 * R, Direction::outgoing, rng);
        const RadialState in = random_scattering_state(g, R, 3.0 * R, Direction::incoming, rng);
        EXPECT_LE(std::abs(h_inner(out, in)), 1e-10);
        EXPECT_LE(rel_diff(detail::project_state(in, Projection::P_plus, R), in), 1e-8);
        EXPECT_LE(h_norm(detail::project_state(in, Projection::P_minus, R)), 1e-8);
        EXPECT_LE(h_norm(detail::project_state(out, Projection::P_plus, R)), 1e-8);
    }
}

TEST(ScatteringOperator, AnnihilatesOutgoingAndIncomingData) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 1.0, 0.0, g);
    std::mt19937_64 rng(5);
    for (Direction d : {Direction::outgoing, Direction::incoming}) {
        const RadialState phi = random_scattering_state(g, R, 3.0 * R, d, rng);
        EXPECT_LE(h_norm(z_apply(phi, 2.0, cut, exact_transport_scheme())), 1e-6);
    }
}

TEST(KgGroup, SemigroupAndErrors) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 1.0, 0.0, g);
    const auto cfg = exact_transport_scheme();
    const RadialState phi = probe_state(g, R, 7, 0);
    const RadialState two = kg_group_apply(kg_group_apply(phi, 1.0, cut, cfg), 1.5, cut, cfg);
    const RadialState one = kg_group_apply(phi, 2.5, cut, cfg);
    EXPECT_LE(rel_diff(two, one), 1e-6);
    EXPECT_THROW(kg_group_apply(phi, -1.0, cut, cfg), Error);
    EXPECT_THROW(kg_group_apply(phi, 1.0, make_cutoff_pair(R, 1.0, 1.0, g), cfg), Error);
}

TEST(KgGroup, FreeCaseMatchesExactPropagator) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 0.0, 0.0, g);
    const RadialState phi = probe_state(g, R, 8, 1);
    EXPECT_LE(rel_diff(kg_group_apply(phi, 3.0, cut, exact_transport_scheme()), free_wave_exact(phi, 3.0)), 1e-8);
}

TEST(ScatteringOperator, DifferenceOperatorIsLocalized) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 1.0, 0.0, g);
    const auto cfg = exact_transport_scheme();
    for (int i = 0; i < 5; ++i) {
        const RadialState phi = probe_state(g, R, 9, i);
        const RadialState m = m_apply(phi, cut, cfg);
        EXPECT_LE(exterior_norm(m, 3.0 * R), 1e-6 * h_norm(phi));
        EXPECT_LE(h_norm(m), 2.0 * restricted_norm(phi, 5.0 * R) * (1.0 + 1e-3));
    }
}

TEST(ScatteringOperator, FactorizationAndAdjointIdentity) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 1.0, 0.0, g);
    const auto cfg = exact_transport_scheme();
    std::mt19937_64 rng(10);
    for (int i = 0; i < 3; ++i) {
        const RadialState phi = probe_state(g, R, 11, i);
        EXPECT_LE(verify_factorization(phi, 4.0 * R, cut, cfg), 1e-4);
        EXPECT_LE(verify_factorization(phi, 5.5 * R, cut, cfg), 1e-4);
        const RadialState in = random_scattering_state(g, R, 3.0 * R, Direction::incoming, rng);
        EXPECT_LE(adjoint_identity_residual(in, phi, 2.0, cut, cfg), 1e-4);
    }
    try {
        verify_factorization(probe_state(g, R, 11, 0), 3.0 * R, cut, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TimeTooSmall);
    }
    const RadialState out = random_scattering_state(g, R, 3.0 * R, Direction::outgoing, rng);
    EXPECT_THROW(adjoint_identity_residual(out, probe_state(g, R, 11, 0), 2.0, cut, cfg), Error);
}

TEST(Probes, DeterministicAndIdentityHasUnitRatio) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 1.0, 0.0, g);
    const RadialState a = probe_state(g, R, 12, 3), b = probe_state(g, R, 12, 3);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.v, b.v);
    EXPECT_NE(probe_state(g, R, 12, 4).w, a.w);
    const OperatorProbe id = probe_norm({OperatorKind::identity, 0.0}, 12, 8, cut, exact_transport_scheme(), g);
    for (double r : id.ratios) EXPECT_DOUBLE_EQ(r, 1.0);
    const OperatorProbe p1 = probe_norm({OperatorKind::Z_KG, 2.0}, 12, 4, cut, exact_transport_scheme(), g);
    const OperatorProbe p2 = probe_norm({OperatorKind::Z_KG, 2.0}, 12, 4, cut, exact_transport_scheme(), g);
    EXPECT_EQ(p1.ratios, p2.ratios);
    EXPECT_LE(p1.max_ratio, 1.0 + 1e-6);
    EXPECT_THROW(probe_norm({OperatorKind::identity, 0.0}, 12, 0, cut, exact_transport_scheme(), g), Error);
}

TEST(ScatteringOperator, ContractsOverTime) {
    const auto g = small_grid();
    const auto cut = make_cutoff_pair(R, 1.0, 0.0, g);
    double prev = INFINITY;
    for (double t : {1.0, 2.0, 4.0}) {
        const double m = probe_norm({OperatorKind::Z_KG, t}, 13, 6, cut, exact_transport_scheme(), g).max_ratio;
        EXPECT_LT(m, prev) << "t=" << t;
        prev = m;
    }
}
