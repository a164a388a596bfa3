#pragma once

// Parametric curve models used by the least-squares engine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cqed/errors.hpp"

namespace cqed::fitting {

enum class ModelKind {
    single_exponential,
    tau_detuning,
    lorentzian_plus_gaussian,
    tanh_transmission,
    exponential_saturation,
    asymmetric_lorentzian,
};

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::single_exponential: return "single-exponential";
        case ModelKind::tau_detuning: return "tau-detuning";
        case ModelKind::lorentzian_plus_gaussian: return "lorentzian-plus-gaussian";
        case ModelKind::tanh_transmission: return "tanh-transmission";
        case ModelKind::exponential_saturation: return "exponential-saturation";
        case ModelKind::asymmetric_lorentzian: return "asymmetric-lorentzian";
    }
    return "unknown";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    for (auto k : {ModelKind::single_exponential, ModelKind::tau_detuning,
                   ModelKind::lorentzian_plus_gaussian, ModelKind::tanh_transmission,
                   ModelKind::exponential_saturation, ModelKind::asymmetric_lorentzian}) {
        if (to_string(k) == s) return k;
    }
    throw UsageError("unknown model kind '" + s + "'");
}

/// Box constraint. A closed end may be reached exactly; an open end is
/// approached but never touched.
struct Bound {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool open_lo = false;
    bool open_hi = false;

    static Bound free() { return {}; }
    static Bound non_negative() { return {0.0, std::numeric_limits<double>::infinity(), false, false}; }
    static Bound positive() { return {0.0, std::numeric_limits<double>::infinity(), true, false}; }

    bool contains(double v) const {
        const bool lo_ok = open_lo ? v > lo : v >= lo;
        const bool hi_ok = open_hi ? v < hi : v <= hi;
        return lo_ok && hi_ok;
    }

    /// Projects `proposed` into the bound; `current` must already be inside.
    double project(double proposed, double current) const {
        if (proposed < lo || (open_lo && proposed == lo)) return open_lo ? 0.5 * (lo + current) : lo;
        if (proposed > hi || (open_hi && proposed == hi)) return open_hi ? 0.5 * (hi + current) : hi;
        return proposed;
    }
};

/// y = A exp(-(t - t_ref) / tau) [+ B]
/// tau(Delta) = tau1 / (C / (1 + 4 Delta^2 / kappa^2) + 1)
/// I(l) = Lorentzian(Ac, lc, FWHM wc) + Gaussian(Az, lz, FWHM wz) + a + b (l - l_ref)
/// T(x) = T0 (1 - tanh((|x| - x0) / s)) / (1 + tanh(x0 / s))      T(0) = T0 exactly
/// T(L) = Tinf (1 - exp(-L / L0))
/// y = A / (1 + ((x - x0) / w)^2), w = w_left for x < x0, w_right otherwise
class FitModel {
public:
    static FitModel single_exponential(bool with_background, double t_ref = 0.0) {
        FitModel m(ModelKind::single_exponential);
        m.names_ = {"amplitude", "tau"};
        m.bounds_ = {Bound::non_negative(), Bound::positive()};
        if (with_background) {
            m.names_.push_back("background");
            m.bounds_.push_back(Bound::free());
        }
        m.reference_ = t_ref;
        return m;
    }

    static FitModel tau_detuning() {
        FitModel m(ModelKind::tau_detuning);
        m.names_ = {"C", "kappa_hz", "tau1"};
        m.bounds_ = {Bound::non_negative(), Bound::positive(), Bound::positive()};
        return m;
    }

    static FitModel lorentzian_plus_gaussian(double x_ref = 0.0) {
        FitModel m(ModelKind::lorentzian_plus_gaussian);
        m.names_ = {"cavity_amplitude", "cavity_center", "cavity_fwhm", "zpl_amplitude",
                    "zpl_center",       "zpl_fwhm",      "offset",      "slope"};
        m.bounds_ = {Bound::non_negative(), Bound::free(),     Bound::positive(), Bound::non_negative(),
                     Bound::free(),         Bound::positive(), Bound::free(),     Bound::free()};
        m.reference_ = x_ref;
        return m;
    }

    static FitModel tanh_transmission() {
        FitModel m(ModelKind::tanh_transmission);
        m.names_ = {"plateau", "half_width", "rolloff"};
        m.bounds_ = {Bound::non_negative(), Bound::free(), Bound::positive()};
        return m;
    }

    static FitModel exponential_saturation() {
        FitModel m(ModelKind::exponential_saturation);
        m.names_ = {"t_inf", "length_scale"};
        m.bounds_ = {Bound::free(), Bound::positive()};
        return m;
    }

    static FitModel asymmetric_lorentzian() {
        FitModel m(ModelKind::asymmetric_lorentzian);
        m.names_ = {"amplitude", "center", "width_left", "width_right"};
        m.bounds_ = {Bound::free(), Bound::free(), Bound::positive(), Bound::positive()};
        return m;
    }

    static FitModel make(ModelKind kind, bool with_background = false, double reference = 0.0) {
        switch (kind) {
            case ModelKind::single_exponential: return single_exponential(with_background, reference);
            case ModelKind::tau_detuning: return tau_detuning();
            case ModelKind::lorentzian_plus_gaussian: return lorentzian_plus_gaussian(reference);
            case ModelKind::tanh_transmission: return tanh_transmission();
            case ModelKind::exponential_saturation: return exponential_saturation();
            case ModelKind::asymmetric_lorentzian: return asymmetric_lorentzian();
        }
        throw UsageError("unknown model kind");
    }

    ModelKind kind() const { return kind_; }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Bound>& bounds() const { return bounds_; }
    double reference() const { return reference_; }
    bool with_background() const { return kind_ == ModelKind::single_exponential && names_.size() == 3; }

    std::size_t index_of(const std::string& name) const {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw UsageError("model has no parameter '" + name + "'");
        return static_cast<std::size_t>(it - names_.begin());
    }

    /// Rejects parameters outside the model's domain (negative widths, ...).
    void check_params(std::span<const double> p) const {
        if (p.size() != size()) {
            throw DomainError(to_string(kind_) + " expects " + std::to_string(size()) + " parameters, got " +
                              std::to_string(p.size()));
        }
        for (std::size_t i = 0; i < size(); ++i) {
            if (!std::isfinite(p[i])) throw DomainError("parameter '" + names_[i] + "' is not finite");
            if (!bounds_[i].contains(p[i])) {
                throw DomainError("parameter '" + names_[i] + "' = " + std::to_string(p[i]) +
                                  " is outside its domain");
            }
        }
    }

    double eval(double x, std::span<const double> p) const {
        switch (kind_) {
            case ModelKind::single_exponential: {
                const double v = p[0] * std::exp(-(x - reference_) / p[1]);
                return size() == 3 ? v + p[2] : v;
            }
            case ModelKind::tau_detuning: {
                const double r = x / p[1];
                return p[2] / (p[0] / (1.0 + 4.0 * r * r) + 1.0);
            }
            case ModelKind::lorentzian_plus_gaussian: {
                const double u = 2.0 * (x - p[1]) / p[2];
                const double v = (x - p[4]) / p[5];
                return p[0] / (1.0 + u * u) + p[3] * std::exp(-4.0 * std::numbers::ln2 * v * v) + p[6] +
                       p[7] * (x - reference_);
            }
            case ModelKind::tanh_transmission:
                return p[0] * (1.0 - std::tanh((std::abs(x) - p[1]) / p[2])) / (1.0 + std::tanh(p[1] / p[2]));
            case ModelKind::exponential_saturation:
                return p[0] * (1.0 - std::exp(-x / p[1]));
            case ModelKind::asymmetric_lorentzian: {
                const double w = x < p[1] ? p[2] : p[3];
                const double u = (x - p[1]) / w;
                return p[0] / (1.0 + u * u);
            }
        }
        return 0.0;
    }

    bool has_analytic_gradient() const {
        return kind_ == ModelKind::single_exponential || kind_ == ModelKind::tau_detuning;
    }

    /// d model / d params at x. Only for kinds with an analytic gradient.
    void gradient(double x, std::span<const double> p, std::span<double> out) const {
        switch (kind_) {
            case ModelKind::single_exponential: {
                const double e = std::exp(-(x - reference_) / p[1]);
                out[0] = e;
                out[1] = p[0] * e * (x - reference_) / (p[1] * p[1]);
                if (size() == 3) out[2] = 1.0;
                return;
            }
            case ModelKind::tau_detuning: {
                const double c = p[0], k = p[1], tau1 = p[2];
                const double r = x / k;
                const double f = 1.0 / (1.0 + 4.0 * r * r);
                const double d = c * f + 1.0;
                const double df_dk = f * f * 8.0 * x * x / (k * k * k);
                out[0] = -tau1 * f / (d * d);
                out[1] = -tau1 * c * df_dk / (d * d);
                out[2] = 1.0 / d;
                return;
            }
            default:
                throw DomainError("no analytic gradient for " + to_string(kind_));
        }
    }

    /// Data-driven starting point.
    std::vector<double> initial_guess(std::span<const double> x, std::span<const double> y) const;

private:
    explicit FitModel(ModelKind k) : kind_(k) {}

    ModelKind kind_;
    std::vector<std::string> names_;
    std::vector<Bound> bounds_;
    double reference_ = 0.0;
};

namespace detail {

// |x - x_peak| at which y first falls below half of (y_peak - floor) on the
// given side; linear interpolation between samples. Returns NaN if it never does.
inline double half_max_distance(std::span<const double> x, std::span<const double> y, std::size_t peak,
                                double floor, int direction) {
    const double half = floor + 0.5 * (y[peak] - floor);
    std::size_t i = peak;
    while (true) {
        if (direction < 0 && i == 0) break;
        if (direction > 0 && i + 1 >= x.size()) break;
        const std::size_t j = direction < 0 ? i - 1 : i + 1;
        if (y[j] <= half) {
            const double frac = (y[i] - half) / (y[i] - y[j]);
            return std::abs(x[i] + frac * (x[j] - x[i]) - x[peak]);
        }
        i = j;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

inline std::vector<double> FitModel::initial_guess(std::span<const double> x, std::span<const double> y) const {
    if (x.empty()) throw DomainError("cannot guess parameters from empty data");
    const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
    const auto peak = static_cast<std::size_t>(ymax_it - y.begin());
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const double span_x = *xmax_it - *xmin_it;

    switch (kind_) {
        case ModelKind::single_exponential: {
            const double bg = size() == 3 ? *ymin_it : 0.0;
            const double amp = std::max(y.front() - bg, 1e-300);
            double tau = span_x / 3.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (y[i] - bg <= amp / std::exp(1.0)) {
                    tau = std::max(x[i] - x.front(), span_x * 1e-3);
                    break;
                }
            }
            std::vector<double> p{amp, tau};
            if (size() == 3) p.push_back(bg);
            return p;
        }
        case ModelKind::tau_detuning: {
            const double tau_max = *ymax_it, tau_min = *ymin_it;
            const auto dip = static_cast<std::size_t>(ymin_it - y.begin());
            // Half-width of the rate-enhancement Lorentzian on the wider side.
            std::vector<double> enh(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) enh[i] = 1.0 / y[i] - 1.0 / tau_max;
            double hw = std::numeric_limits<double>::quiet_NaN();
            for (int dir : {-1, 1}) {
                const double d = detail::half_max_distance(x, enh, dip, 0.0, dir);
                if (std::isfinite(d)) hw = std::isfinite(hw) ? std::max(hw, d) : d;
            }
            const double kappa = std::isfinite(hw) && hw > 0.0 ? 2.0 * (hw + std::abs(x[dip]))
                                                                : std::max(span_x, 1.0);
            return {tau_max / tau_min - 1.0, kappa, tau_max};
        }
        case ModelKind::tanh_transmission: {
            const double t0 = *ymax_it;
            double x0 = 0.5 * std::max(std::abs(*xmin_it), std::abs(*xmax_it));
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = std::abs(y[i] - 0.5 * t0);
                if (d < best) {
                    best = d;
                    x0 = std::abs(x[i]);
                }
            }
            return {t0, x0, std::max(0.2 * x0, span_x * 0.02)};
        }
        case ModelKind::exponential_saturation: {
            const double tinf = *ymax_it;
            double l0 = span_x / 3.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (y[i] >= (1.0 - std::exp(-1.0)) * tinf) {
                    l0 = std::max(x[i], span_x * 1e-3);
                    break;
                }
            }
            return {tinf, l0};
        }
        case ModelKind::asymmetric_lorentzian: {
            double wl = detail::half_max_distance(x, y, peak, 0.0, -1);
            double wr = detail::half_max_distance(x, y, peak, 0.0, 1);
            if (!std::isfinite(wl) || wl <= 0.0) wl = span_x / 4.0;
            if (!std::isfinite(wr) || wr <= 0.0) wr = span_x / 4.0;
            return {y[peak], x[peak], wl, wr};
        }
        case ModelKind::lorentzian_plus_gaussian:
            break;
    }
    throw DomainError("no generic initial guess for " + to_string(kind_) + "; use fit_spectrum");
}

}  // namespace cqed::fitting
