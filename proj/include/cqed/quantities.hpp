#pragma once

// Typed physical quantities, unit conversions and physical constants.
//
// Reported frequencies (linewidths, couplings, detunings, optical carriers)
// use ordinary frequency in Hz, i.e. the "value / 2pi" convention. Angular
// frequencies only appear inside formulas that need them.

#include <cmath>
#include <compare>
#include <numbers>
#include <string>

#include "cqed/errors.hpp"

namespace cqed {

/// CODATA 2018 values (SI). All four are exact or recommended values:
///
/// | symbol | value                | unit  |
/// |--------|----------------------|-------|
/// | hbar   | 1.054571817e-34      | J s   |
/// | eps0   | 8.8541878128e-12     | F/m   |
/// | c      | 299792458            | m/s   |
/// | debye  | 1e-21 / c            | C m   |
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;
    static constexpr double eps0 = 8.8541878128e-12;
    static constexpr double c = 299792458.0;
    static constexpr double debye = 1e-21 / c;
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

namespace detail {

template <class Tag>
class Scalar {
public:
    constexpr Scalar() = default;
    constexpr explicit Scalar(double v) : value_(v) {}

    constexpr double value() const noexcept { return value_; }

    constexpr auto operator<=>(const Scalar&) const = default;

    constexpr Scalar operator-() const { return Scalar(-value_); }
    constexpr Scalar operator+(Scalar o) const { return Scalar(value_ + o.value_); }
    constexpr Scalar operator-(Scalar o) const { return Scalar(value_ - o.value_); }
    constexpr Scalar operator*(double k) const { return Scalar(value_ * k); }
    constexpr Scalar operator/(double k) const { return Scalar(value_ / k); }
    constexpr double operator/(Scalar o) const { return value_ / o.value_; }
    friend constexpr Scalar operator*(double k, Scalar s) { return Scalar(k * s.value_); }

private:
    double value_ = 0.0;
};

}  // namespace detail

struct OrdinaryFrequencyTag {};
struct AngularFrequencyTag {};
struct DurationTag {};

/// Frequency in Hz (cycles per second).
using OrdinaryFrequency = detail::Scalar<OrdinaryFrequencyTag>;
/// Frequency in rad/s.
using AngularFrequency = detail::Scalar<AngularFrequencyTag>;
/// Time in seconds.
using Duration = detail::Scalar<DurationTag>;

constexpr AngularFrequency to_angular(OrdinaryFrequency f) { return AngularFrequency(two_pi * f.value()); }
constexpr OrdinaryFrequency to_ordinary(AngularFrequency w) { return OrdinaryFrequency(w.value() / two_pi); }

constexpr OrdinaryFrequency hertz(double v) { return OrdinaryFrequency(v); }
constexpr OrdinaryFrequency gigahertz(double v) { return OrdinaryFrequency(v * 1e9); }
constexpr OrdinaryFrequency terahertz(double v) { return OrdinaryFrequency(v * 1e12); }
constexpr Duration seconds(double v) { return Duration(v); }
constexpr Duration nanoseconds(double v) { return Duration(v * 1e-9); }

/// Dimensionless linear power ratio. Physical channel efficiencies lie in [0, 1];
/// the type itself does not enforce that so gains can be represented during
/// intermediate algebra. Use `checked` at API boundaries.
class Efficiency {
public:
    constexpr Efficiency() = default;
    constexpr explicit Efficiency(double v) : value_(v) {}

    static Efficiency checked(double v) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw DomainError("efficiency must lie in [0, 1], got " + std::to_string(v));
        }
        return Efficiency(v);
    }

    constexpr double value() const noexcept { return value_; }
    constexpr auto operator<=>(const Efficiency&) const = default;
    constexpr Efficiency operator*(Efficiency o) const { return Efficiency(value_ * o.value_); }

private:
    double value_ = 1.0;
};

/// Power ratio to decibels, 10 log10(x).
inline double linear_to_db(double linear) {
    if (!(linear > 0.0) || !std::isfinite(linear)) {
        throw DomainError("dB conversion needs a positive finite linear value, got " +
                          std::to_string(linear));
    }
    return 10.0 * std::log10(linear);
}

inline double db_to_linear(double db) {
    if (std::isnan(db)) throw DomainError("dB value is NaN");
    return std::pow(10.0, db / 10.0);
}

inline double to_db(Efficiency e) { return linear_to_db(e.value()); }
inline Efficiency efficiency_from_db(double db) { return Efficiency(db_to_linear(db)); }

/// Q = nu_c / kappa, both as ordinary frequencies.
inline double quality_factor(OrdinaryFrequency resonance, OrdinaryFrequency linewidth) {
    if (!(linewidth.value() > 0.0)) {
        throw DomainError("quality factor needs a positive linewidth");
    }
    return resonance / linewidth;
}

/// nu = c / lambda. The wavelength is in meters.
inline OrdinaryFrequency frequency_from_wavelength(double wavelength_m) {
    if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
        throw DomainError("wavelength must be positive and finite");
    }
    return OrdinaryFrequency(PhysicalConstants::c / wavelength_m);
}

inline double wavelength_from_frequency(OrdinaryFrequency nu) {
    if (!(nu.value() > 0.0) || !std::isfinite(nu.value())) {
        throw DomainError("frequency must be positive and finite");
    }
    return PhysicalConstants::c / nu.value();
}

}  // namespace cqed
