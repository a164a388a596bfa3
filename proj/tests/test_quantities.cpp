#include <gtest/gtest.h>

#include <random>

#include "cqed/quantities.hpp"

using namespace cqed;

// Reference values computed independently (Python, CODATA 2018 constants).

TEST(Decibels, EdgeCouplerEfficiency) {
    EXPECT_NEAR(linear_to_db(0.197), -7.055337738, 1e-8);
}

TEST(Decibels, ThreeDbIsHalf) {
    EXPECT_NEAR(db_to_linear(-3.0103), 0.49999999501, 1e-10);
}

TEST(Decibels, UnitTransmissionIsZero) {
    EXPECT_DOUBLE_EQ(linear_to_db(1.0), 0.0);
    EXPECT_DOUBLE_EQ(db_to_linear(0.0), 1.0);
}

TEST(Decibels, NonPositiveRejected) {
    EXPECT_THROW(linear_to_db(0.0), DomainError);
    EXPECT_THROW(linear_to_db(-0.1), DomainError);
    EXPECT_THROW(db_to_linear(std::nan("")), DomainError);
}

TEST(Decibels, RoundTripProperty) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-12.0, 0.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::pow(10.0, u(rng));
        EXPECT_NEAR(db_to_linear(linear_to_db(x)) / x, 1.0, 1e-12);
    }
}

TEST(Decibels, ProductIsSumProperty) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = u(rng), b = u(rng);
        EXPECT_NEAR(linear_to_db(a * b), linear_to_db(a) + linear_to_db(b), 1e-10);
    }
}

TEST(QualityFactor, CavityLinewidths) {
    EXPECT_NEAR(quality_factor(terahertz(475), gigahertz(940)), 505.3191489, 1e-6);
    EXPECT_NEAR(quality_factor(terahertz(475), gigahertz(570)), 833.3333333, 1e-6);
    EXPECT_THROW(quality_factor(terahertz(475), hertz(0)), DomainError);
}

TEST(Wavelength, ZeroPhononLine) {
    EXPECT_NEAR(frequency_from_wavelength(637e-9).value() / 4.706318022e14, 1.0, 1e-9);
    EXPECT_NEAR(frequency_from_wavelength(631.1e-9).value() / 4.750316241e14, 1.0, 1e-9);
    EXPECT_THROW(frequency_from_wavelength(0.0), DomainError);
}

TEST(Wavelength, RoundTrip) {
    const double lam = wavelength_from_frequency(terahertz(475));
    EXPECT_NEAR(frequency_from_wavelength(lam).value(), 475e12, 1e-3);
}

TEST(Frequency, AngularConversion) {
    const auto w = to_angular(gigahertz(1.0));
    EXPECT_NEAR(w.value(), two_pi * 1e9, 1e-3);
    EXPECT_NEAR(to_ordinary(w).value(), 1e9, 1e-6);
}

TEST(Frequency, TypedArithmetic) {
    const auto a = gigahertz(3.0), b = gigahertz(1.0);
    EXPECT_DOUBLE_EQ((a + b).value(), 4e9);
    EXPECT_DOUBLE_EQ((a - b).value(), 2e9);
    EXPECT_DOUBLE_EQ(a / b, 3.0);
    EXPECT_LT(b, a);
    EXPECT_DOUBLE_EQ((nanoseconds(2) * 2.0).value(), 4e-9);
}

TEST(Efficiency, CheckedRange) {
    EXPECT_NO_THROW(Efficiency::checked(0.0));
    EXPECT_NO_THROW(Efficiency::checked(1.0));
    EXPECT_THROW(Efficiency::checked(1.01), DomainError);
    EXPECT_THROW(Efficiency::checked(-0.01), DomainError);
    EXPECT_NEAR(to_db(Efficiency(0.5) * Efficiency(0.5)), 2 * linear_to_db(0.5), 1e-12);
}
