#pragma once

// Seeded synthetic datasets built from the forward models: Poisson-count decay
// traces, tau(Delta) points, two-peak PL spectra and an apodized field grid.
// All draws come from std::mt19937_64, so a seed fixes the output bit-for-bit.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cqed/coupling.hpp"
#include "cqed/dynamics.hpp"
#include "cqed/fit_models.hpp"
#include "cqed/fits.hpp"
#include "cqed/quantities.hpp"

namespace cqed::synthetic {

/// Defaults are the device values: C = 0.14, kappa/2pi = 940 GHz, tau1 = 15.9 ns.
struct DeviceParams {
    double cooperativity = 0.14;
    OrdinaryFrequency kappa = gigahertz(940.0);
    Duration tau1 = nanoseconds(15.9);
};

/// Detunings used for the shipped decay traces.
inline std::vector<double> default_trace_detunings_hz() { return {0.0, 250e9, 500e9, 1000e9, 2000e9}; }

struct DecayTraceSpec {
    double amplitude = 1e4;          // expected counts in the first bin
    double background = 0.0;         // expected counts per bin
    Duration bin_width = nanoseconds(1.28);
    std::size_t bins = 200;
};

/// Expected counts A exp(-t / tau) + b on the bin grid (no noise).
inline dynamics::DecayTrace expected_decay(Duration tau, const DecayTraceSpec& s) {
    if (!(tau.value() > 0.0) || !(s.amplitude >= 0.0) || !(s.background >= 0.0) || s.bins < 2) {
        throw DomainError("decay trace needs tau > 0, non-negative counts and at least two bins");
    }
    dynamics::DecayTrace t;
    t.kind = dynamics::TraceKind::measured;
    t.bin_width = s.bin_width;
    t.times.resize(s.bins);
    t.values.resize(s.bins);
    for (std::size_t i = 0; i < s.bins; ++i) {
        t.times[i] = static_cast<double>(i) * s.bin_width.value();
        t.values[i] = s.amplitude * std::exp(-t.times[i] / tau.value()) + s.background;
    }
    return t;
}

/// Replaces each expected value by a Poisson draw.
inline dynamics::DecayTrace poisson_resample(dynamics::DecayTrace t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (double& v : t.values) {
        std::poisson_distribution<long long> d(v);
        v = v > 0.0 ? static_cast<double>(d(rng)) : 0.0;
    }
    t.kind = dynamics::TraceKind::measured;
    return t;
}

inline dynamics::DecayTrace noisy_decay(Duration tau, const DecayTraceSpec& s, std::uint64_t seed) {
    return poisson_resample(expected_decay(tau, s), seed);
}

/// Decay traces at each detuning using the analytic lifetime tau(Delta).
inline std::vector<dynamics::DecayTrace> detuning_traces(const DeviceParams& d,
                                                         const std::vector<double>& detunings_hz,
                                                         const DecayTraceSpec& s, std::uint64_t seed) {
    std::vector<dynamics::DecayTrace> out;
    for (std::size_t i = 0; i < detunings_hz.size(); ++i) {
        const Duration tau = dynamics::tau_of_detuning(d.cooperativity, d.kappa, d.tau1, hertz(detunings_hz[i]));
        out.push_back(noisy_decay(tau, s, seed + i));
    }
    return out;
}

/// Detuning grid for tau(Delta) points: `n` values spread over [-span, span].
inline std::vector<double> detuning_grid(double span_hz, std::size_t n) {
    if (n < 2 || !(span_hz > 0.0)) throw DomainError("detuning grid needs n >= 2 and a positive span");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = -span_hz + 2.0 * span_hz * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return d;
}

/// tau(Delta) points with Gaussian noise of standard deviation `sigma` (seconds).
/// sigma = 0 gives the noiseless curve; the reported sigma_s is then omitted.
inline std::vector<fitting::DetuningPoint> tau_detuning_points(const DeviceParams& d,
                                                               const std::vector<double>& detunings_hz,
                                                               double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<fitting::DetuningPoint> out;
    for (double delta : detunings_hz) {
        const double tau = dynamics::tau_of_detuning(d.cooperativity, d.kappa, d.tau1, hertz(delta)).value();
        fitting::DetuningPoint p{delta, tau, std::nullopt};
        if (sigma > 0.0) {
            p.tau_s = tau + sigma * noise(rng);
            p.sigma_s = sigma;
        }
        out.push_back(p);
    }
    return out;
}

/// Lorentzian cavity plus Gaussian ZPL on a linear baseline, wavelengths in nm.
struct SpectrumSpec {
    std::vector<double> params{1.0, 636.0, 1.33, 0.6, 637.2, 0.35, 0.05, 0.0};
    double lo_nm = 630.0;
    double hi_nm = 644.0;
    std::size_t points = 281;
    double noise = 0.0;   // Gaussian, absolute
};

struct Spectrum {
    std::vector<double> wavelength_nm;
    std::vector<double> intensity;
};

inline Spectrum two_peak_spectrum(const SpectrumSpec& s, std::uint64_t seed) {
    if (s.points < 2 || !(s.hi_nm > s.lo_nm)) throw DomainError("spectrum needs >= 2 points and hi > lo");
    const auto model = fitting::FitModel::lorentzian_plus_gaussian(0.5 * (s.lo_nm + s.hi_nm));
    model.check_params(s.params);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Spectrum out;
    for (std::size_t i = 0; i < s.points; ++i) {
        const double x = s.lo_nm + (s.hi_nm - s.lo_nm) * static_cast<double>(i) / static_cast<double>(s.points - 1);
        double y = model.eval(x, s.params);
        if (s.noise > 0.0) y += s.noise * noise(rng);
        out.wavelength_nm.push_back(x);
        out.intensity.push_back(y);
    }
    return out;
}

/// Apodized standing-wave field sampled on a (2m+1)^3 grid.
inline coupling::FieldGrid apodized_grid(const std::array<std::size_t, 3>& half_counts = {24, 8, 6},
                                         const coupling::Vec3& spacing = {20e-9, 20e-9, 20e-9}) {
    return coupling::sample_grid(coupling::ApodizedStandingWave{}, half_counts, spacing);
}

}  // namespace cqed::synthetic
