#pragma once

// Rate algebra for a cavity-coupled emitter: decay-channel bookkeeping,
// quantum efficiency and Debye-Waller factor, and cooperativity / Purcell
// factors for the total and zero-phonon-line emission.

#include <cmath>
#include <string>
#include <utility>

#include "cqed/errors.hpp"
#include "cqed/quantities.hpp"

namespace cqed::purcell {

/// Decay rates (1/s) of the zero-phonon line, phonon sideband and
/// nonradiative channels.
struct RateBudget {
    double zpl = 0.0;
    double psb = 0.0;
    double nonrad = 0.0;

    void validate() const {
        if (!(zpl >= 0.0 && psb >= 0.0 && nonrad >= 0.0) ||
            !std::isfinite(zpl + psb + nonrad)) {
            throw DomainError("rate budget components must be finite and non-negative");
        }
        if (zpl + psb + nonrad <= 0.0) {
            throw DomainError("rate budget needs at least one positive component");
        }
    }

    double radiative() const { return zpl + psb; }

    RateBudget scaled(double alpha) const { return {alpha * zpl, alpha * psb, alpha * nonrad}; }
};

struct EfficiencyFactors {
    double quantum_efficiency = 1.0;
    double debye_waller = 0.025;

    double product() const { return quantum_efficiency * debye_waller; }

    void validate() const {
        auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in_unit(quantum_efficiency) || !in_unit(debye_waller)) {
            throw DomainError("efficiency factors must lie in [0, 1]");
        }
    }
};

struct PurcellResult {
    double cooperativity = 0.0;       // C
    double purcell = 1.0;             // F_P = C + 1
    double zpl_cooperativity = 0.0;   // C_ZPL
    double zpl_purcell = 1.0;         // F_ZPL = C_ZPL + 1
};

/// ZPL cooperativity estimated from lifetimes. `suppressed` is set when the
/// on-resonance lifetime is longer than the far-detuned one, which gives a
/// negative value (bandgap-like suppression) rather than an error.
struct ZplCooperativity {
    double value = 0.0;
    bool suppressed = false;
};

/// gamma_1^exp = gamma_ZPL + gamma_PSB + gamma_nonrad.
inline double total_decay_rate(const RateBudget& b) {
    b.validate();
    return b.zpl + b.psb + b.nonrad;
}

inline EfficiencyFactors efficiency_factors(const RateBudget& b) {
    b.validate();
    const double rad = b.radiative();
    if (!(rad > 0.0)) {
        throw DomainError("Debye-Waller factor undefined for a budget with zero radiative rate");
    }
    return {rad / (rad + b.nonrad), b.zpl / rad};
}

/// On-resonance total rate when only the ZPL channel is enhanced by `zpl_purcell`.
inline double on_resonance_rate(const RateBudget& b, double zpl_purcell) {
    b.validate();
    return zpl_purcell * b.zpl + b.psb + b.nonrad;
}

namespace detail {
inline void require_positive_product(const EfficiencyFactors& eta) {
    eta.validate();
    if (!(eta.product() > 0.0)) {
        throw DomainError("eta_QE * eta_DW must be positive");
    }
}
}  // namespace detail

/// C_ZPL = (tau_off / tau_on - 1) / (eta_QE eta_DW).
inline ZplCooperativity czpl_from_lifetimes(Duration tau_on, Duration tau_off,
                                            const EfficiencyFactors& eta) {
    if (!(tau_on.value() > 0.0) || !(tau_off.value() > 0.0)) {
        throw DomainError("lifetimes must be positive");
    }
    detail::require_positive_product(eta);
    const double c = (tau_off / tau_on - 1.0) / eta.product();
    return {c, tau_on > tau_off};
}

inline PurcellResult zpl_quantities_from_C(double cooperativity, const EfficiencyFactors& eta) {
    if (!(cooperativity >= 0.0) || !std::isfinite(cooperativity)) {
        throw DomainError("cooperativity must be finite and non-negative");
    }
    detail::require_positive_product(eta);
    const double czpl = cooperativity / eta.product();
    return {cooperativity, cooperativity + 1.0, czpl, czpl + 1.0};
}

/// ZPL quantities at both ends of a Debye-Waller range.
inline std::pair<PurcellResult, PurcellResult> zpl_quantities_over_range(
    double cooperativity, double quantum_efficiency, double dw_low, double dw_high) {
    return {zpl_quantities_from_C(cooperativity, {quantum_efficiency, dw_low}),
            zpl_quantities_from_C(cooperativity, {quantum_efficiency, dw_high})};
}

/// General-case estimator: C_ZPL = (gamma_on - gamma_off) / gamma'_ZPL, with
/// the far-detuned budget `primed` already modified by the host structure.
inline double czpl_general(const RateBudget& primed, double gamma_on) {
    const double gamma_off = total_decay_rate(primed);
    if (!(primed.zpl > 0.0)) {
        throw DomainError("general C_ZPL needs a positive primed ZPL rate");
    }
    if (!std::isfinite(gamma_on) || gamma_on < 0.0) {
        throw DomainError("on-resonance rate must be finite and non-negative");
    }
    return (gamma_on - gamma_off) / primed.zpl;
}

}  // namespace cqed::purcell
