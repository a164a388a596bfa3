// Walkthrough: device numbers from lifetime to link budget.

#include <cmath>
#include <cstdio>

#include "cqed/coupling.hpp"
#include "cqed/dynamics.hpp"
#include "cqed/fits.hpp"
#include "cqed/linkbudget.hpp"
#include "cqed/purcell.hpp"
#include "cqed/synthetic.hpp"

using namespace cqed;

int main() {
    // Vacuum coupling of a 16 ns emitter in a 0.5 (lambda/n)^3 mode at 475 THz.
    const auto nu = terahertz(475);
    const double lambda = wavelength_from_frequency(nu);
    const double volume = 0.5 * std::pow(lambda / std::sqrt(5.7), 3);
    const double e_zpf = coupling::zero_point_field(nu, 5.7, volume);
    const coupling::EmitterDipole emitter{nanoseconds(16), nu, 0.025};
    const auto g0 = coupling::g0_ideal(emitter.zpl(), e_zpf);
    std::printf("dipole %.2f D (ZPL %.3f D), E_zpf %.3g V/m, g0/2pi %.3f GHz\n", emitter.total().debye(),
                emitter.zpl().debye(), e_zpf, g0.value() * 1e-9);

    // Weak-coupling regime: a small g0 against a broad cavity.
    dynamics::AtomCavityParams p;
    p.g0 = gigahertz(0.57);
    p.kappa = gigahertz(940);
    p.gamma1 = 1.0 / 15.9e-9;
    std::printf("C = %.4f, Q = %.0f\n", dynamics::cooperativity(p), quality_factor(nu, p.kappa));

    // Master equation against the adiabatic-elimination rate.
    const auto grid = dynamics::uniform_time_grid(nanoseconds(1.28), nanoseconds(80));
    for (double d : {0.0, 470e9, 1880e9}) {
        p.detuning = hertz(d);
        const auto est = dynamics::extract_decay_rate(dynamics::evolve_master_equation(p, 1, grid));
        std::printf("  Delta/2pi = %6.0f GHz: tau = %.3f ns (analytic %.3f ns)\n", d * 1e-9, 1e9 / est.rate,
                    1e9 / dynamics::analytic_total_rate(p));
    }

    // Recover C, kappa and tau1 from noisy lifetimes.
    const synthetic::DeviceParams dev;
    const auto pts = synthetic::tau_detuning_points(dev, synthetic::detuning_grid(1.5e12, 13), 0.15e-9, 7);
    const auto fit = fitting::fit_tau_detuning(pts);
    std::printf("fit: C = %.3f +/- %.3f, kappa/2pi = %.0f +/- %.0f GHz, tau1 = %.2f +/- %.2f ns\n", fit.param("C"),
                fit.error("C"), fit.param("kappa_hz") * 1e-9, fit.error("kappa_hz") * 1e-9, fit.param("tau1") * 1e9,
                fit.error("tau1") * 1e9);

    // ZPL enhancement for the fitted C.
    for (double dw : {0.02, 0.03}) {
        const auto r = purcell::zpl_quantities_from_C(fit.param("C"), {1.0, dw});
        std::printf("  eta_DW = %.2f: C_ZPL = %.2f, F_ZPL = %.2f\n", dw, r.zpl_cooperativity, r.zpl_purcell);
    }

    // Ensemble weighting on a synthetic nanobeam mode.
    const auto mode = synthetic::apodized_grid();
    std::printf("mode volume %.3g m^3, weighting factor %.3f\n", coupling::mode_volume(mode),
                coupling::ensemble_weighting_factor(mode, {}));

    // Collection chain.
    using namespace linkbudget;
    const auto rep = chain_efficiency({efficiency_element("taper", 0.8), propagation_element("waveguide", 1.9, 0.35),
                                       efficiency_element("collection", 0.197)});
    std::printf("\n%s", format_table(rep).c_str());
}
