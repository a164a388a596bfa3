#include <gtest/gtest.h>

#include <random>

#include "cqed/purcell.hpp"

using namespace cqed;
using namespace cqed::purcell;

TEST(ZplQuantities, DebyeWallerRange) {
    const auto [lo, hi] = zpl_quantities_over_range(0.14, 1.0, 0.02, 0.03);
    EXPECT_NEAR(lo.zpl_cooperativity, 7.0, 1e-12);
    EXPECT_NEAR(lo.zpl_purcell, 8.0, 1e-12);
    EXPECT_NEAR(hi.zpl_cooperativity, 4.666666667, 1e-8);
    EXPECT_NEAR(hi.zpl_purcell, 5.666666667, 1e-8);
    EXPECT_NEAR(lo.purcell, 1.14, 1e-12);
}

TEST(ZplQuantities, ZeroCooperativity) {
    const auto r = zpl_quantities_from_C(0.0, {1.0, 0.025});
    EXPECT_EQ(r.zpl_cooperativity, 0.0);
    EXPECT_EQ(r.zpl_purcell, 1.0);
}

TEST(ZplQuantities, InvalidInputs) {
    EXPECT_THROW(zpl_quantities_from_C(-0.1, {}), DomainError);
    EXPECT_THROW(zpl_quantities_from_C(0.1, {1.0, 0.0}), DomainError);
    EXPECT_THROW(zpl_quantities_from_C(0.1, {0.0, 0.02}), DomainError);
    EXPECT_THROW(zpl_quantities_from_C(0.1, {1.2, 0.02}), DomainError);
}

TEST(CzplFromLifetimes, MeasuredLifetimes) {
    const auto lo = czpl_from_lifetimes(nanoseconds(13.95), nanoseconds(15.9), {1.0, 0.02});
    const auto hi = czpl_from_lifetimes(nanoseconds(13.95), nanoseconds(15.9), {1.0, 0.03});
    EXPECT_NEAR(lo.value, 6.98925, 1e-5);
    EXPECT_NEAR(hi.value, 4.65950, 1e-5);
    EXPECT_FALSE(lo.suppressed);
}

TEST(CzplFromLifetimes, LongerOnResonanceIsSuppression) {
    const auto r = czpl_from_lifetimes(nanoseconds(17), nanoseconds(15.9), {1.0, 0.025});
    EXPECT_LT(r.value, 0.0);
    EXPECT_TRUE(r.suppressed);
}

TEST(CzplFromLifetimes, EqualLifetimesGiveZero) {
    EXPECT_EQ(czpl_from_lifetimes(nanoseconds(15), nanoseconds(15), {}).value, 0.0);
}

TEST(RateBudget, EfficiencyFactorsRecovered) {
    const RateBudget b{0.025, 0.875, 0.1};
    const auto eta = efficiency_factors(b);
    EXPECT_NEAR(eta.quantum_efficiency, 0.9, 1e-12);
    EXPECT_NEAR(eta.debye_waller, 0.025 / 0.9, 1e-12);
    EXPECT_NEAR(total_decay_rate(b), 1.0, 1e-12);
}

TEST(RateBudget, ZeroRadiativeRejected) {
    EXPECT_THROW(efficiency_factors({0.0, 0.0, 1.0}), DomainError);
    EXPECT_THROW(total_decay_rate({-1.0, 1.0, 0.0}), DomainError);
    EXPECT_THROW(total_decay_rate({0.0, 0.0, 0.0}), DomainError);
}

// C = eta_QE eta_DW C_ZPL must hold for the lifetime-based estimate when the
// on-resonance rate is the ZPL-enhanced budget.
TEST(PurcellProperty, LifetimeEstimateConsistentWithBudget) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 1.0), f(1.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        const RateBudget b{u(rng) * 0.1, u(rng), u(rng) * 0.3};
        const double fz = f(rng);
        const double gon = on_resonance_rate(b, fz);
        const auto eta = efficiency_factors(b);
        const auto z = czpl_from_lifetimes(Duration(1.0 / gon), Duration(1.0 / total_decay_rate(b)), eta);
        EXPECT_NEAR(z.value, fz - 1.0, 1e-9 * fz);
        EXPECT_NEAR(czpl_general(b, gon), fz - 1.0, 1e-9 * fz);
    }
}

// Scaling every channel by the same factor leaves the general estimator unchanged.
TEST(PurcellProperty, GeneralEstimatorScaleInvariant) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.01, 1.0), s(0.1, 10.0);
    for (int i = 0; i < 200; ++i) {
        const RateBudget b{u(rng), u(rng), u(rng)};
        const double gon = on_resonance_rate(b, 1.0 + 10.0 * u(rng));
        const double a = s(rng);
        EXPECT_NEAR(czpl_general(b.scaled(a), a * gon), czpl_general(b, gon), 1e-9);
    }
}

TEST(PurcellProperty, ZplCooperativityScalesInverselyWithDebyeWaller) {
    for (double dw : {0.01, 0.02, 0.03, 0.1, 1.0}) {
        const auto r = zpl_quantities_from_C(0.14, {1.0, dw});
        EXPECT_NEAR(r.zpl_cooperativity * dw, 0.14, 1e-14);
    }
}

TEST(CzplGeneral, NeedsZplRate) {
    EXPECT_THROW(czpl_general({0.0, 1.0, 0.0}, 2.0), DomainError);
}
