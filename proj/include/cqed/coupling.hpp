#pragma once

// Vacuum coupling rate of an emitter to a cavity mode: mode volume from a
// sampled field map, zero-point field, transition dipole from the radiative
// lifetime, and the ensemble weighting factor that reduces the ideal g0 for
// emitters spread over the cavity.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cqed/detail/summation.hpp"
#include "cqed/errors.hpp"
#include "cqed/quantities.hpp"

namespace cqed::coupling {

using Vec3 = std::array<double, 3>;

inline double norm2(const Vec3& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; }

/// Real field amplitudes and relative permittivity sampled on a regular grid.
/// Point (ix, iy, iz) sits at origin + index * spacing and stands for a cell
/// of volume dx dy dz centred on it. Storage is row-major with z fastest:
/// linear index = (ix * ny + iy) * nz + iz.
class FieldGrid {
public:
    FieldGrid(std::array<std::size_t, 3> dims, Vec3 spacing, Vec3 origin, std::vector<Vec3> field,
              std::vector<double> eps_rel)
        : dims_(dims), spacing_(spacing), origin_(origin), field_(std::move(field)),
          eps_(std::move(eps_rel)) {
        validate();
    }

    const std::array<std::size_t, 3>& dims() const { return dims_; }
    const Vec3& spacing() const { return spacing_; }
    const Vec3& origin() const { return origin_; }
    const std::vector<Vec3>& field() const { return field_; }
    const std::vector<double>& eps_rel() const { return eps_; }

    std::size_t size() const { return field_.size(); }
    double cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }

    std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const {
        return (ix * dims_[1] + iy) * dims_[2] + iz;
    }

    Vec3 position(std::size_t linear) const {
        const std::size_t iz = linear % dims_[2];
        const std::size_t iy = (linear / dims_[2]) % dims_[1];
        const std::size_t ix = linear / (dims_[2] * dims_[1]);
        return {origin_[0] + static_cast<double>(ix) * spacing_[0],
                origin_[1] + static_cast<double>(iy) * spacing_[1],
                origin_[2] + static_cast<double>(iz) * spacing_[2]};
    }

    /// eps_rel |E|^2 at a point.
    double energy_density(std::size_t i) const { return eps_[i] * norm2(field_[i]); }

private:
    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (dims_[a] < 2) throw DomainError("field grid needs at least 2 points per axis");
            if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
                throw DomainError("field grid spacing must be positive");
            }
            if (!std::isfinite(origin_[a])) throw DomainError("field grid origin must be finite");
        }
        const std::size_t n = dims_[0] * dims_[1] * dims_[2];
        if (field_.size() != n || eps_.size() != n) {
            throw DomainError("field grid holds " + std::to_string(field_.size()) + " field and " +
                              std::to_string(eps_.size()) + " permittivity samples, expected " +
                              std::to_string(n));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(norm2(field_[i]))) throw DomainError("non-finite field sample");
            if (!(eps_[i] >= 1.0) || !std::isfinite(eps_[i])) {
                throw DomainError("relative permittivity must be finite and >= 1");
            }
        }
    }

    std::array<std::size_t, 3> dims_;
    Vec3 spacing_;
    Vec3 origin_;
    std::vector<Vec3> field_;
    std::vector<double> eps_;
};

/// Axis-aligned box, open on all sides: lo < r < hi.
struct Region {
    Vec3 lo{-400e-9, -150e-9, -100e-9};
    Vec3 hi{400e-9, 150e-9, 100e-9};

    bool contains(const Vec3& r) const {
        for (int a = 0; a < 3; ++a) {
            if (!(r[a] > lo[a] && r[a] < hi[a])) return false;
        }
        return true;
    }

    static Region everywhere() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {{-inf, -inf, -inf}, {inf, inf, inf}};
    }
};

struct WeightingConfig {
    double threshold_fraction = 0.2;  // |E_threshold| / |E_max|
    Region region{};
};

/// Index of max eps|E|^2 (lowest index on ties) among points accepted by `in`.
template <class Pred>
std::size_t argmax_energy_density(const FieldGrid& g, Pred&& in) {
    std::size_t best = g.size();
    double best_val = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!in(i)) continue;
        const double v = g.energy_density(i);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    return best;
}

inline std::size_t argmax_energy_density(const FieldGrid& g) {
    return argmax_energy_density(g, [](std::size_t) { return true; });
}

/// Whether max |E| and max eps|E|^2 fall on the same grid point. The weighting
/// factor assumes they do; callers should warn otherwise.
inline bool peak_positions_coincide(const FieldGrid& g) {
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = norm2(g.field()[i]);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    const std::size_t em = argmax_energy_density(g);
    return best == em || norm2(g.field()[em]) == best_val;
}

/// V = sum(eps |E|^2 dV) / max(eps |E|^2), midpoint rule over every cell. m^3.
inline double mode_volume(const FieldGrid& g) {
    detail::CompensatedSum sum;
    double peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double u = g.energy_density(i);
        sum += u;
        peak = std::max(peak, u);
    }
    if (!(peak > 0.0)) throw DomainError("mode volume undefined for an all-zero field");
    return sum.value() / peak * g.cell_volume();
}

/// V / (lambda / n)^3.
inline double normalized_mode_volume(double volume_m3, double wavelength_m, double index) {
    if (!(wavelength_m > 0.0) || !(index > 0.0)) {
        throw DomainError("normalized mode volume needs positive wavelength and index");
    }
    const double cube = std::pow(wavelength_m / index, 3);
    return volume_m3 / cube;
}

/// E_zpf = sqrt(hbar omega_c / (2 eps_rel eps0 V)), V/m.
inline double zero_point_field(OrdinaryFrequency cavity, double eps_rel_at_max, double volume_m3) {
    if (!(cavity.value() > 0.0) || !(eps_rel_at_max > 0.0) || !(volume_m3 > 0.0)) {
        throw DomainError("zero-point field needs positive frequency, permittivity and volume");
    }
    using K = PhysicalConstants;
    return std::sqrt(K::hbar * to_angular(cavity).value() /
                     (2.0 * eps_rel_at_max * K::eps0 * volume_m3));
}

struct Dipole {
    double coulomb_meters = 0.0;
    double debye() const { return coulomb_meters / PhysicalConstants::debye; }
};

/// Transition dipole from the spontaneous-emission rate 1/tau1 at frequency nu:
/// d = sqrt(3 pi eps0 hbar c^3 gamma1 / omega^3).
inline Dipole dipole_from_lifetime(Duration tau1, OrdinaryFrequency nu) {
    if (!(tau1.value() > 0.0) || !(nu.value() > 0.0)) {
        throw DomainError("dipole estimate needs positive lifetime and frequency");
    }
    using K = PhysicalConstants;
    const double omega = to_angular(nu).value();
    const double gamma1 = 1.0 / tau1.value();
    return {std::sqrt(3.0 * std::numbers::pi * K::eps0 * K::hbar * K::c * K::c * K::c * gamma1 /
                      (omega * omega * omega))};
}

/// Emitter dipole with its zero-phonon-line share, d_ZPL = sqrt(eta_DW) d.
struct EmitterDipole {
    Duration tau1;
    OrdinaryFrequency frequency;
    double debye_waller;

    Dipole total() const { return dipole_from_lifetime(tau1, frequency); }

    Dipole zpl() const {
        if (!(debye_waller > 0.0 && debye_waller <= 1.0)) {
            throw DomainError("Debye-Waller factor must lie in (0, 1]");
        }
        return {std::sqrt(debye_waller) * total().coulomb_meters};
    }
};

/// g0/2pi = d E_zpf / (2 pi hbar).
inline OrdinaryFrequency g0_ideal(Dipole d_zpl, double e_zpf) {
    if (!(d_zpl.coulomb_meters >= 0.0) || !(e_zpf >= 0.0)) {
        throw DomainError("g0 needs non-negative dipole and field");
    }
    return to_ordinary(AngularFrequency(d_zpl.coulomb_meters * e_zpf / PhysicalConstants::hbar));
}

/// Spatially averaged weighting factor for an isotropic dipole ensemble:
///
///   f_i = E_i / |E_max|            E_max read where eps|E|^2 peaks in the region
///   w_i = max(|E_i| - t |E_max|, 0) / |E_max|
///   p_i = w_i / sum_j w_j
///   F   = sqrt( sum_i p_i |f_i|^2 / 3 )
inline double ensemble_weighting_factor(const FieldGrid& g, const WeightingConfig& cfg) {
    const double t = cfg.threshold_fraction;
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("threshold fraction must lie in [0, 1)");

    std::vector<std::size_t> in_region;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (cfg.region.contains(g.position(i))) in_region.push_back(i);
    }
    if (in_region.empty()) throw DomainError("weighting region does not intersect the grid");

    std::size_t peak = in_region.front();
    double peak_val = -1.0;
    for (std::size_t i : in_region) {
        const double v = g.energy_density(i);
        if (v > peak_val) {
            peak_val = v;
            peak = i;
        }
    }
    const double e_max = std::sqrt(norm2(g.field()[peak]));
    if (!(e_max > 0.0)) throw DomainError("field vanishes everywhere in the weighting region");

    detail::CompensatedSum w_sum, wf_sum;
    for (std::size_t i : in_region) {
        const double e2 = norm2(g.field()[i]);
        const double w = std::max(std::sqrt(e2) - t * e_max, 0.0) / e_max;
        if (w == 0.0) continue;
        w_sum += w;
        wf_sum += w * (e2 / (e_max * e_max));
    }
    if (!(w_sum.value() > 0.0)) throw DomainError("threshold excludes all emitters");
    return std::sqrt(wf_sum.value() / w_sum.value() / 3.0);
}

/// g0_eff = g0_theory * F.
inline OrdinaryFrequency effective_g0(OrdinaryFrequency g0_theory, double weighting) {
    if (!(weighting >= 0.0 && weighting <= 1.0)) {
        throw DomainError("weighting factor must lie in [0, 1]");
    }
    return g0_theory * weighting;
}

// ---------------------------------------------------------------------------
// Synthetic field maps

/// Separable apodized standing wave, the stand-in for an FDTD export of a
/// nanobeam photonic-crystal mode (x along the beam). The dominant component
/// is E_y:
///
///   E_y = cos(pi x / period) exp(-x^2 / (2 sx^2)) cos(pi y / width) cos(pi z / thickness)
///
/// with a weaker E_x = minor_fraction * sin(pi x / period) exp(...) * (...).
/// eps_rel is `eps_inside` within the slab |y| < width/2, |z| < thickness/2
/// and 1 outside, but the field is evaluated everywhere on the grid.
struct ApodizedStandingWave {
    double period = 130e-9;
    double envelope_sigma = 250e-9;
    double width = 300e-9;
    double thickness = 200e-9;
    double minor_fraction = 0.0;
    double eps_inside = 5.7;
    bool uniform_eps = false;

    Vec3 field(const Vec3& r) const {
        const double env = std::exp(-r[0] * r[0] / (2.0 * envelope_sigma * envelope_sigma)) *
                           std::cos(std::numbers::pi * r[1] / width) *
                           std::cos(std::numbers::pi * r[2] / thickness);
        return {minor_fraction * std::sin(std::numbers::pi * r[0] / period) * env,
                std::cos(std::numbers::pi * r[0] / period) * env, 0.0};
    }

    double eps(const Vec3& r) const {
        if (uniform_eps) return eps_inside;
        return (std::abs(r[1]) < 0.5 * width && std::abs(r[2]) < 0.5 * thickness) ? eps_inside : 1.0;
    }
};

/// Samples `profile` on a grid of (2 m + 1) points per axis centred on 0 with
/// the given spacing, so the origin of coordinates is always a grid point.
template <class Profile>
FieldGrid sample_grid(const Profile& profile, std::array<std::size_t, 3> half_counts, Vec3 spacing) {
    std::array<std::size_t, 3> dims{};
    Vec3 origin{};
    for (int a = 0; a < 3; ++a) {
        dims[a] = 2 * half_counts[a] + 1;
        origin[a] = -static_cast<double>(half_counts[a]) * spacing[a];
    }
    const std::size_t n = dims[0] * dims[1] * dims[2];
    std::vector<Vec3> field(n);
    std::vector<double> eps(n);
    for (std::size_t ix = 0; ix < dims[0]; ++ix)
        for (std::size_t iy = 0; iy < dims[1]; ++iy)
            for (std::size_t iz = 0; iz < dims[2]; ++iz) {
                const Vec3 r{origin[0] + static_cast<double>(ix) * spacing[0],
                             origin[1] + static_cast<double>(iy) * spacing[1],
                             origin[2] + static_cast<double>(iz) * spacing[2]};
                const std::size_t i = (ix * dims[1] + iy) * dims[2] + iz;
                field[i] = profile.field(r);
                eps[i] = profile.eps(r);
            }
    return FieldGrid(dims, spacing, origin, std::move(field), std::move(eps));
}

}  // namespace cqed::coupling
