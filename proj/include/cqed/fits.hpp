#pragma once

// Experiment-specific fits built on the least-squares engine: lifetime versus
// detuning, time-resolved decay traces, cavity/ZPL spectra and coupler
// transmission curves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cqed/csv.hpp"
#include "cqed/dynamics.hpp"
#include "cqed/errors.hpp"
#include "cqed/fit_models.hpp"
#include "cqed/least_squares.hpp"

namespace cqed::fitting {

// ---------------------------------------------------------------------------
// tau(Delta)

struct DetuningPoint {
    double detuning_hz = 0.0;          // Delta/2pi
    double tau_s = 0.0;
    std::optional<double> sigma_s;
};

/// Fits tau(Delta) = tau1 / (C f(Delta) + 1) for (C, kappa/2pi, tau1). Points
/// are weighted by their sigma when every point carries one.
inline FitResult fit_tau_detuning(std::span<const DetuningPoint> points, const FitOptions& base = {}) {
    if (points.size() < 4) throw DomainError("tau(Delta) fit needs at least 4 points");
    std::vector<double> x, y, s;
    std::set<double> distinct;
    bool all_sigma = true;
    for (const auto& pt : points) {
        if (!(pt.tau_s > 0.0)) throw DomainError("relaxation times must be positive");
        x.push_back(pt.detuning_hz);
        y.push_back(pt.tau_s);
        distinct.insert(std::abs(pt.detuning_hz));
        if (pt.sigma_s) {
            s.push_back(*pt.sigma_s);
        } else {
            all_sigma = false;
        }
    }
    if (distinct.size() < 3) {
        throw DegenerateFitError("tau(Delta) fit needs at least 3 distinct |Delta| values");
    }
    if (!all_sigma) s.clear();

    const FitModel model = FitModel::tau_detuning();
    FitOptions opt = base;
    opt.allow_singular = true;
    opt.typical_scale = {1.0, 1e9, 1e-8};
    auto res = least_squares_fit(model, x, y, s, std::nullopt, opt);

    const double c = res.param("C");
    const bool c_zero = c <= 1e-9 * std::max(1.0, res.error("C"));
    if (c_zero || !res.identifiable[1]) {
        res.identifiable[1] = false;
        res.standard_errors[1] = std::numeric_limits<double>::quiet_NaN();
        res.warnings.push_back("no detuning dependence: kappa is unidentifiable");
    }
    return res;
}

// ---------------------------------------------------------------------------
// Decay traces

struct DecayFitOptions {
    bool with_background = false;
    std::size_t drop_first_bins = 0;   // instead of deconvolving the instrument response
    double min_expected_counts = 1.0;  // measured traces: trailing bins below this are dropped
    std::size_t reweight_passes = 2;   // measured traces: refits with model-based sigma
    FitOptions fit{};
};

/// Weighted fit of A exp(-(t - t0)/tau) [+ B], t0 = first retained bin.
///
/// Simulated traces are unweighted. Measured (count) traces start from
/// sigma_i = sqrt(max(y_i, 1)), which biases tau low, then refit with
/// sigma_i = sqrt(max(model_i, 1)). Trailing bins where the fitted model
/// expects fewer than `min_expected_counts` are dropped, since near-empty
/// bins carry almost no information and drag the reduced chi-square below 1.
inline FitResult fit_decay_trace(const dynamics::DecayTrace& trace, const DecayFitOptions& opt = {}) {
    trace.validate();
    if (opt.drop_first_bins >= trace.size()) throw DomainError("all bins dropped");
    const std::span<const double> t(trace.times.data() + opt.drop_first_bins, trace.size() - opt.drop_first_bins);
    const std::span<const double> y(trace.values.data() + opt.drop_first_bins, trace.size() - opt.drop_first_bins);
    if (t.size() < 10) throw DomainError("decay fit needs at least 10 bins");
    if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
        throw DomainError("decay trace is identically zero");
    }

    std::vector<double> sigma;
    if (trace.kind == dynamics::TraceKind::measured) {
        sigma.reserve(y.size());
        for (double v : y) sigma.push_back(std::sqrt(std::max(v, 1.0)));
    }

    const FitModel model = FitModel::single_exponential(opt.with_background, t.front());

    // Start: background from the last tenth, amplitude from the first bin, tau
    // from a log-linear fit of the background-subtracted head.
    double bg = 0.0;
    if (opt.with_background) {
        const std::size_t tail = std::max<std::size_t>(1, y.size() / 10);
        for (std::size_t i = y.size() - tail; i < y.size(); ++i) bg += y[i];
        bg /= static_cast<double>(tail);
    }
    const double peak = *std::max_element(y.begin(), y.end());
    const double amp = std::max(y.front() - bg, 0.5 * (peak - bg));
    double tau = (t.back() - t.front()) / 3.0;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double v = y[i] - bg;
            if (v <= 0.05 * amp) break;
            const double lx = t[i] - t.front(), ly = std::log(v);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            n += 1;
        }
        const double den = n * sxx - sx * sx;
        if (n >= 3 && den > 0.0) {
            const double slope = (n * sxy - sx * sy) / den;
            if (slope < 0.0) tau = -1.0 / slope;
        }
    }
    std::vector<double> init{std::max(amp, 1e-300), tau};
    if (opt.with_background) init.push_back(bg);

    FitOptions fo = opt.fit;
    fo.typical_scale = {peak, tau, std::max(peak * 1e-3, 1e-300)};
    auto res = least_squares_fit(model, t, y, sigma, init, fo);
    if (trace.kind != dynamics::TraceKind::measured || opt.reweight_passes == 0) return res;

    std::size_t n = t.size();
    if (opt.min_expected_counts > 0.0) {
        while (n > 10 && model.eval(t[n - 1], res.params) < opt.min_expected_counts) --n;
    }
    const auto tw = t.first(n);
    const auto yw = y.first(n);
    for (std::size_t pass = 0; pass < opt.reweight_passes; ++pass) {
        sigma.resize(n);
        for (std::size_t i = 0; i < n; ++i) sigma[i] = std::sqrt(std::max(model.eval(tw[i], res.params), 1.0));
        res = least_squares_fit(model, tw, yw, sigma, res.params, fo);
    }
    if (n < t.size()) {
        res.warnings.push_back("fit window ends at bin " + std::to_string(opt.drop_first_bins + n) +
                               " where expected counts fall below " + csv::format_double(opt.min_expected_counts));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Spectra

struct SpectrumFitOptions {
    std::optional<double> cavity_center_hint;
    std::optional<double> zpl_center_hint;
    double correlation_warning = 0.99;
    FitOptions fit{};
};

struct SpectrumFit {
    FitResult fit;
    double cavity_center = 0.0;
    double cavity_fwhm = 0.0;
    double quality_factor = 0.0;
    double cavity_height = 0.0;   // above the linear baseline
    double zpl_height = 0.0;      // above the linear baseline
    bool zpl_present = true;
    double center_correlation = 0.0;
    bool high_correlation = false;
};

namespace detail {

struct PeakGuess {
    std::size_t index = 0;
    double height = 0.0;
    double fwhm = 0.0;
};

inline PeakGuess guess_peak(std::span<const double> x, std::span<const double> r, const std::vector<char>& mask) {
    PeakGuess g;
    g.height = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (mask[i] && r[i] > g.height) {
            g.height = r[i];
            g.index = i;
        }
    }
    double wl = half_max_distance(x, r, g.index, 0.0, -1);
    double wr = half_max_distance(x, r, g.index, 0.0, 1);
    const double dx = std::abs(x.back() - x.front()) / static_cast<double>(x.size());
    if (!std::isfinite(wl)) wl = wr;
    if (!std::isfinite(wr)) wr = wl;
    g.fwhm = std::isfinite(wl) ? std::max(wl + wr, 2.0 * dx) : 10.0 * dx;
    return g;
}

}  // namespace detail

/// Lorentzian cavity + Gaussian ZPL + linear baseline. Wavelength units are the
/// caller's (nm in the CLI); Q = center / FWHM is unit-free. When no second
/// feature stands out the Gaussian is held at zero amplitude and reported as
/// not identifiable.
inline SpectrumFit fit_spectrum(std::span<const double> wavelength, std::span<const double> intensity,
                                const SpectrumFitOptions& opt = {}) {
    if (wavelength.size() != intensity.size()) throw DomainError("wavelength and intensity lengths differ");
    const std::size_t n = wavelength.size();
    if (n < 20) throw DomainError("spectrum fit needs at least 20 samples");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(wavelength[i] > wavelength[i - 1])) throw DomainError("wavelengths must be strictly increasing");
    }

    const double x_ref = 0.5 * (wavelength.front() + wavelength.back());

    // Baseline from the outer tenth on each side.
    const std::size_t edge = std::max<std::size_t>(2, n / 10);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= edge && i < n - edge) continue;
        const double u = wavelength[i] - x_ref;
        sx += u;
        sy += intensity[i];
        sxx += u * u;
        sxy += u * intensity[i];
        m += 1;
    }
    const double slope0 = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double offset0 = (sy - slope0 * sx) / m;

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = intensity[i] - offset0 - slope0 * (wavelength[i] - x_ref);

    auto nearest = [&](double w) {
        return static_cast<std::size_t>(
            std::min_element(wavelength.begin(), wavelength.end(),
                             [w](double a, double b) { return std::abs(a - w) < std::abs(b - w); }) -
            wavelength.begin());
    };

    std::vector<char> mask(n, 1);
    const detail::PeakGuess first = detail::guess_peak(wavelength, resid, mask);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(wavelength[i] - wavelength[first.index]) < 0.75 * first.fwhm) mask[i] = 0;
    }
    const detail::PeakGuess second = detail::guess_peak(wavelength, resid, mask);

    double noise = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (i < edge || i >= n - edge) noise += resid[i] * resid[i];
    noise = std::sqrt(noise / m);
    const bool has_second = opt.zpl_center_hint.has_value() ||
                            (second.height > 0.1 * first.height && second.height > 3.0 * noise);

    // The broader feature is the cavity; hints override the located centers.
    detail::PeakGuess cav = first, zpl = second;
    if (has_second && second.fwhm > first.fwhm) std::swap(cav, zpl);
    if (opt.cavity_center_hint) cav.index = nearest(*opt.cavity_center_hint);
    if (opt.zpl_center_hint) zpl.index = nearest(*opt.zpl_center_hint);

    std::vector<double> init{std::max(resid[cav.index], 1e-12), wavelength[cav.index], cav.fwhm,
                             has_second ? std::max(resid[zpl.index], 1e-12) : 0.0,
                             has_second ? wavelength[zpl.index] : wavelength[cav.index],
                             has_second ? zpl.fwhm : cav.fwhm,
                             offset0,
                             slope0};

    FitOptions fo = opt.fit;
    const double ymax = std::max(std::abs(*std::max_element(intensity.begin(), intensity.end())), 1e-300);
    const double xspan = wavelength.back() - wavelength.front();
    fo.typical_scale = {ymax, xspan, xspan, ymax, xspan, xspan, ymax, ymax / xspan};
    if (!has_second) {
        fo.fixed = {false, false, false, true, true, true, false, false};
        fo.allow_singular = true;
    }

    const FitModel model = FitModel::lorentzian_plus_gaussian(x_ref);
    SpectrumFit out;
    out.fit = least_squares_fit(model, wavelength, intensity, {}, init, fo);
    const auto& p = out.fit.params;
    out.zpl_present = has_second;
    out.cavity_center = p[1];
    out.cavity_fwhm = p[2];
    out.quality_factor = p[1] / p[2];
    out.cavity_height = model.eval(p[1], p) - (p[6] + p[7] * (p[1] - x_ref));
    out.zpl_height = has_second ? model.eval(p[4], p) - (p[6] + p[7] * (p[4] - x_ref)) : 0.0;
    if (has_second) {
        out.center_correlation = out.fit.correlation(1, 4);
        out.high_correlation = std::abs(out.center_correlation) > opt.correlation_warning;
        if (out.high_correlation) {
            out.fit.warnings.push_back("cavity and ZPL centers are highly correlated (|corr| = " +
                                       std::to_string(std::abs(out.center_correlation)) +
                                       "); peaks may be unresolved");
        }
    } else {
        out.fit.warnings.push_back("no second spectral feature found; Gaussian held at zero amplitude");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transmission curves

/// Transmission model evaluation; rejects non-positive widths and scales.
inline double eval_transmission_model(ModelKind kind, double x, std::span<const double> params) {
    if (kind != ModelKind::tanh_transmission && kind != ModelKind::exponential_saturation &&
        kind != ModelKind::asymmetric_lorentzian) {
        throw DomainError(to_string(kind) + " is not a transmission model");
    }
    const FitModel m = FitModel::make(kind);
    m.check_params(params);
    return m.eval(x, params);
}

inline FitResult fit_transmission(ModelKind kind, std::span<const double> x, std::span<const double> y,
                                  std::span<const double> sigma = {},
                                  std::optional<std::vector<double>> init = std::nullopt,
                                  const FitOptions& opt = {}) {
    if (kind != ModelKind::tanh_transmission && kind != ModelKind::exponential_saturation &&
        kind != ModelKind::asymmetric_lorentzian) {
        throw DomainError(to_string(kind) + " is not a transmission model");
    }
    return least_squares_fit(FitModel::make(kind), x, y, sigma, std::move(init), opt);
}

}  // namespace cqed::fitting
