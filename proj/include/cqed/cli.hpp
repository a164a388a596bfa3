#pragma once

// The `cqed` command line. Every subcommand writes one JSON document (or a
// text table for `link-budget --table`) to --out, atomically, or to stdout.
// Exit status: 0 success, 1 domain error, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cqed/coupling.hpp"
#include "cqed/csv.hpp"
#include "cqed/dynamics.hpp"
#include "cqed/errors.hpp"
#include "cqed/fits.hpp"
#include "cqed/io.hpp"
#include "cqed/linkbudget.hpp"
#include "cqed/purcell.hpp"
#include "cqed/report.hpp"
#include "cqed/synthetic.hpp"

namespace cqed::cli {

using report::Json;

struct Common {
    std::uint64_t seed = 1;
    std::optional<double> tol;
    std::string out;
};

namespace detail {

inline void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "seed for synthetic noise");
    sub->add_option("--tol", c.tol, "relative tolerance (integrator or fit step)")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "output path (written atomically); stdout when omitted");
}

inline Json header(const std::string& command) {
    Json j;
    j["schema_version"] = report::schema_version;
    j["command"] = command;
    return j;
}

inline void emit(const Common& c, const std::string& text, std::ostream& out) {
    if (c.out.empty()) {
        out << text;
    } else {
        io::write_file_atomic(c.out, text);
    }
}

inline void emit(const Common& c, const Json& j, std::ostream& out) { emit(c, j.dump(2) + "\n", out); }

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(path + ": invalid JSON at byte " + std::to_string(e.byte));
    }
}

/// "name:key=value:key=value" with keys efficiency, loss_db, loss_db_per_cm,
/// length_cm, sigma_db, sigma_efficiency.
inline linkbudget::LinkElement parse_element(const std::string& spec, std::size_t index) {
    Json e;
    std::stringstream ss(spec);
    std::string part;
    bool first = true;
    while (std::getline(ss, part, ':')) {
        const auto eq = part.find('=');
        if (first && eq == std::string::npos) {
            e["name"] = part;
            first = false;
            continue;
        }
        first = false;
        if (eq == std::string::npos) throw UsageError("--element '" + spec + "': expected key=value, got '" + part + "'");
        double v = 0.0;
        const std::string value = part.substr(eq + 1);
        if (!csv::detail::parse_double(value, v)) {
            throw UsageError("--element '" + spec + "': '" + value + "' is not a number");
        }
        e[part.substr(0, eq)] = v;
    }
    return report::element_from_json(e, index);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
    double g0_ghz = 0.57;
    std::optional<double> cooperativity;
    double kappa_ghz = 940.0;
    double tau1_ns = 15.9;
    double gamma_phi = 0.0;
    std::vector<double> detuning_ghz{0.0};
    int n_max = 1;
    double bin_ns = 1.28;
    std::optional<double> horizon_ns;   // default 5 tau1
    std::string integrator = "adaptive";
    std::string trace_dir;
    std::string from_fit;
};

inline Json simulate_decay(SimulateArgs a, const Common& c) {
    if (!a.from_fit.empty()) {
        const auto replay = report::replay_from_json(detail::read_json_file(a.from_fit));
        if (replay.model.kind() != fitting::ModelKind::tau_detuning) {
            throw UsageError("--from-fit needs a tau-detuning fit result");
        }
        a.cooperativity = replay.params[0];
        a.kappa_ghz = replay.params[1] * 1e-9;
        a.tau1_ns = replay.params[2] * 1e9;
    }
    dynamics::AtomCavityParams p;
    p.kappa = gigahertz(a.kappa_ghz);
    p.gamma1 = 1.0 / nanoseconds(a.tau1_ns).value();
    p.gamma_phi = a.gamma_phi;
    p.g0 = a.cooperativity ? dynamics::g0_from_cooperativity(*a.cooperativity, p.kappa, p.gamma1)
                           : gigahertz(a.g0_ghz);
    p.validate();

    dynamics::EvolveOptions eo;
    eo.n_max = a.n_max;
    eo.rel_tol = c.tol.value_or(1e-8);
    eo.integrator = a.integrator == "fixed" ? dynamics::Integrator::fixed_step : dynamics::Integrator::adaptive;
    const auto grid = dynamics::uniform_time_grid(nanoseconds(a.bin_ns), nanoseconds(a.horizon_ns.value_or(5.0 * a.tau1_ns)));

    Json j = detail::header("simulate-decay");
    Json params;
    params["g0_hz"] = p.g0.value();
    params["kappa_hz"] = p.kappa.value();
    params["gamma1"] = p.gamma1;
    params["gamma_phi"] = p.gamma_phi;
    params["C"] = p.kappa.value() > 0.0 ? report::number(dynamics::cooperativity(p)) : Json(nullptr);
    params["n_max"] = a.n_max;
    params["rel_tol"] = eo.rel_tol;
    params["integrator"] = a.integrator;
    j["params"] = params;

    Json traces = Json::array();
    for (double d_ghz : a.detuning_ghz) {
        dynamics::AtomCavityParams pd = p;
        pd.detuning = gigahertz(d_ghz);
        const auto ev = dynamics::evolve_density(pd, grid, eo);
        Json t;
        t["detuning_hz"] = pd.detuning.value();
        const auto est = dynamics::extract_decay_rate(ev.trace);
        t["rate"] = est.rate;
        t["rate_std_error"] = est.std_error;
        t["window_s"] = {est.t_start, est.t_end};
        t["curvature_flag"] = est.curvature_flag;
        t["warnings"] = est.warnings;
        if (pd.kappa.value() > 0.0) {
            const double ar = dynamics::analytic_total_rate(pd);
            t["analytic_rate"] = ar;
            t["relative_difference"] = (est.rate - ar) / ar;
        }
        t["max_trace_deviation"] = *std::max_element(ev.trace_deviation.begin(), ev.trace_deviation.end());
        t["max_hermiticity_error"] = *std::max_element(ev.hermiticity_error.begin(), ev.hermiticity_error.end());
        t["min_eigenvalue"] = *std::min_element(ev.min_eigenvalue.begin(), ev.min_eigenvalue.end());
        t["times_s"] = ev.trace.times;
        t["population"] = ev.trace.values;
        if (!a.trace_dir.empty()) {
            const auto name = "trace_" + csv::format_double(d_ghz) + "ghz.csv";  // d_ghz is as typed
            const auto path = std::filesystem::path(a.trace_dir) / name;
            io::write_file_atomic(path, io::trace_csv_string(ev.trace, {{"detuning_hz", csv::format_double(pd.detuning.value())}}));
            t["trace_file"] = name;
        }
        traces.push_back(t);
    }
    j["traces"] = traces;
    return j;
}

struct FitDecayArgs {
    std::string input;
    bool background = false;
    std::size_t drop_first = 0;
};

inline Json fit_decay(const FitDecayArgs& a, const Common& c) {
    const auto trace = io::read_trace_file(a.input);
    fitting::DecayFitOptions opt;
    opt.with_background = a.background;
    opt.drop_first_bins = a.drop_first;
    if (c.tol) opt.fit.xtol = *c.tol;
    const auto r = fitting::fit_decay_trace(trace, opt);
    Json j = detail::header("fit-decay");
    j["input"] = a.input;
    j["fit"] = report::fit_result(r);
    j["tau_s"] = r.param("tau");
    j["tau_error_s"] = report::number(r.error("tau"));
    j["rate"] = 1.0 / r.param("tau");
    return j;
}

struct FitDetuningArgs {
    std::string input;
};

inline Json fit_detuning(const FitDetuningArgs& a, const Common& c) {
    const auto table = csv::read_file(a.input, 2, 3);
    std::vector<fitting::DetuningPoint> pts;
    for (const auto& row : table.rows) {
        fitting::DetuningPoint p{row[0], row[1], std::nullopt};
        if (row.size() == 3) p.sigma_s = row[2];
        pts.push_back(p);
    }
    fitting::FitOptions fo;
    if (c.tol) fo.xtol = *c.tol;
    const auto r = fitting::fit_tau_detuning(pts, fo);
    const double cc = r.param("C"), kappa = r.param("kappa_hz"), tau1 = r.param("tau1");
    Json j = detail::header("fit-detuning");
    j["input"] = a.input;
    j["fit"] = report::fit_result(r);
    j["C"] = cc;
    j["kappa_hz"] = kappa;
    j["tau1"] = tau1;
    j["tau_min_s"] = dynamics::tau_of_detuning(cc, hertz(kappa), Duration(tau1), hertz(0.0)).value();
    j["F_P"] = cc + 1.0;
    j["g0_hz"] = dynamics::g0_from_cooperativity(cc, hertz(kappa), 1.0 / tau1).value();
    return j;
}

struct FitSpectrumArgs {
    std::string input;
    std::string model = "lorentzian-plus-gaussian";
    std::optional<double> cavity_hint_nm;
    std::optional<double> zpl_hint_nm;
    std::vector<double> init;
};

inline Json fit_spectrum(const FitSpectrumArgs& a, const Common& c) {
    const auto kind = fitting::model_kind_from_string(a.model);
    Json j = detail::header("fit-spectrum");
    j["input"] = a.input;
    fitting::FitOptions fo;
    if (c.tol) fo.xtol = *c.tol;
    if (kind == fitting::ModelKind::lorentzian_plus_gaussian) {
        const auto table = csv::read_file(a.input, 2, 2);
        fitting::SpectrumFitOptions so;
        so.cavity_center_hint = a.cavity_hint_nm;
        so.zpl_center_hint = a.zpl_hint_nm;
        so.fit = fo;
        const auto s = fitting::fit_spectrum(table.column(0), table.column(1), so);
        j["fit"] = report::fit_result(s.fit);
        j["cavity_center_nm"] = s.cavity_center;
        j["cavity_fwhm_nm"] = s.cavity_fwhm;
        j["quality_factor"] = s.quality_factor;
        j["cavity_height"] = s.cavity_height;
        j["zpl_height"] = s.zpl_height;
        j["zpl_present"] = s.zpl_present;
        j["center_correlation"] = report::number(s.center_correlation);
        j["high_correlation"] = s.high_correlation;
        return j;
    }
    if (kind != fitting::ModelKind::tanh_transmission && kind != fitting::ModelKind::exponential_saturation &&
        kind != fitting::ModelKind::asymmetric_lorentzian) {
        throw UsageError("fit-spectrum does not handle model " + a.model);
    }
    const auto table = csv::read_file(a.input, 2, 3);
    const auto x = table.column(0), y = table.column(1);
    const auto sigma = table.rows.front().size() == 3 ? table.column(2) : std::vector<double>{};
    std::optional<std::vector<double>> init;
    if (!a.init.empty()) init = a.init;
    const auto r = fitting::fit_transmission(kind, x, y, sigma, init, fo);
    j["fit"] = report::fit_result(r);
    return j;
}

struct PurcellArgs {
    std::optional<double> cooperativity;
    double eta_qe = 1.0;
    std::vector<double> eta_dw{0.02, 0.03};
    std::optional<double> tau_on_ns;
    std::optional<double> tau_off_ns;
};

inline Json purcell_cmd(const PurcellArgs& a, const Common&) {
    if (!a.cooperativity && !(a.tau_on_ns && a.tau_off_ns)) {
        throw UsageError("purcell needs --C or both --tau-on-ns and --tau-off-ns");
    }
    if (a.tau_on_ns.has_value() != a.tau_off_ns.has_value()) {
        throw UsageError("--tau-on-ns and --tau-off-ns go together");
    }
    Json j = detail::header("purcell");
    if (a.cooperativity) {
        Json rs = Json::array();
        for (double dw : a.eta_dw) {
            const purcell::EfficiencyFactors eta{a.eta_qe, dw};
            rs.push_back(report::purcell_result(purcell::zpl_quantities_from_C(*a.cooperativity, eta), eta));
        }
        j["results"] = rs;
    }
    if (a.tau_on_ns) {
        Json rs = Json::array();
        for (double dw : a.eta_dw) {
            const purcell::EfficiencyFactors eta{a.eta_qe, dw};
            const auto z = purcell::czpl_from_lifetimes(nanoseconds(*a.tau_on_ns), nanoseconds(*a.tau_off_ns), eta);
            Json r;
            r["eta_qe"] = a.eta_qe;
            r["eta_dw"] = dw;
            r["C"] = *a.tau_off_ns / *a.tau_on_ns - 1.0;
            r["C_ZPL"] = z.value;
            r["F_ZPL"] = z.value + 1.0;
            r["suppressed"] = z.suppressed;
            rs.push_back(r);
        }
        j["from_lifetimes"] = rs;
    }
    return j;
}

struct G0Args {
    double tau1_ns = 16.0;
    std::optional<double> freq_thz;
    std::optional<double> wavelength_nm;
    double eps = 5.7;
    double v_norm = 0.5;
    std::string grid;
    std::vector<double> eta_dw{0.02, 0.025, 0.03};
    std::optional<double> weighting;
    std::optional<double> threshold;
};

inline OrdinaryFrequency frequency_arg(std::optional<double> thz, std::optional<double> nm, double default_thz) {
    if (thz && nm) throw UsageError("give at most one of --freq-thz and --wavelength-nm");
    if (nm) return frequency_from_wavelength(*nm * 1e-9);
    return terahertz(thz.value_or(default_thz));
}

inline Json g0_cmd(const G0Args& a, const Common&) {
    const auto nu = frequency_arg(a.freq_thz, a.wavelength_nm, 475.0);
    const double lambda = wavelength_from_frequency(nu);
    double eps = a.eps, volume = 0.0;
    std::optional<double> weighting = a.weighting;
    Json j = detail::header("g0");
    if (!a.grid.empty()) {
        const auto g = io::read_field_grid_file(a.grid);
        volume = coupling::mode_volume(g);
        eps = g.eps_rel()[coupling::argmax_energy_density(g)];
        if (a.threshold && !weighting) {
            weighting = coupling::ensemble_weighting_factor(g, {*a.threshold, coupling::Region{}});
        }
        j["grid"] = a.grid;
    } else {
        if (!(a.eps >= 1.0)) throw DomainError("relative permittivity must be >= 1");
        if (a.threshold) throw UsageError("--threshold needs --grid");
        volume = a.v_norm * std::pow(lambda / std::sqrt(a.eps), 3);
    }
    const double e_zpf = coupling::zero_point_field(nu, eps, volume);
    const auto d = coupling::dipole_from_lifetime(nanoseconds(a.tau1_ns), nu);
    j["frequency_hz"] = nu.value();
    j["wavelength_m"] = lambda;
    j["eps_rel"] = eps;
    j["mode_volume_m3"] = volume;
    j["mode_volume_norm"] = coupling::normalized_mode_volume(volume, lambda, std::sqrt(eps));
    j["e_zpf_v_per_m"] = e_zpf;
    j["dipole_cm"] = d.coulomb_meters;
    j["dipole_debye"] = d.debye();
    if (weighting) j["weighting"] = *weighting;
    Json rs = Json::array();
    for (double dw : a.eta_dw) {
        const coupling::EmitterDipole em{nanoseconds(a.tau1_ns), nu, dw};
        const auto g0 = coupling::g0_ideal(em.zpl(), e_zpf);
        Json r;
        r["eta_dw"] = dw;
        r["dipole_zpl_debye"] = em.zpl().debye();
        r["g0_hz"] = g0.value();
        if (weighting) r["g0_effective_hz"] = coupling::effective_g0(g0, *weighting).value();
        rs.push_back(r);
    }
    j["results"] = rs;
    return j;
}

struct GridArgs {
    std::string grid;
    double threshold = 0.2;
    std::vector<double> region_nm;
    bool whole_grid = false;
    std::optional<double> freq_thz;
    std::optional<double> wavelength_nm;
};

inline coupling::Region region_arg(const GridArgs& a) {
    if (a.whole_grid) {
        if (!a.region_nm.empty()) throw UsageError("give at most one of --region-nm and --whole-grid");
        return coupling::Region::everywhere();
    }
    if (a.region_nm.empty()) return {};
    if (a.region_nm.size() != 3) throw UsageError("--region-nm takes three half-widths x,y,z");
    coupling::Region r;
    for (int k = 0; k < 3; ++k) {
        if (!(a.region_nm[k] > 0.0)) throw UsageError("--region-nm half-widths must be positive");
        r.lo[k] = -a.region_nm[k] * 1e-9;
        r.hi[k] = a.region_nm[k] * 1e-9;
    }
    return r;
}

inline Json ensemble_weight(const GridArgs& a, const Common&) {
    const auto g = io::read_field_grid_file(a.grid);
    const auto region = region_arg(a);
    Json j = detail::header("ensemble-weight");
    j["grid"] = a.grid;
    j["threshold_fraction"] = a.threshold;
    j["region_m"] = {region.lo, region.hi};
    for (auto& side : j["region_m"])
        for (auto& v : side) v = report::number(v.get<double>());
    j["weighting"] = coupling::ensemble_weighting_factor(g, {a.threshold, region});
    j["peaks_coincide"] = coupling::peak_positions_coincide(g);
    if (!coupling::peak_positions_coincide(g)) {
        j["warnings"] = {"max |E| and max eps|E|^2 fall on different grid points"};
    }
    return j;
}

inline Json mode_volume_cmd(const GridArgs& a, const Common&) {
    const auto g = io::read_field_grid_file(a.grid);
    const auto nu = frequency_arg(a.freq_thz, a.wavelength_nm, 475.0);
    const double lambda = wavelength_from_frequency(nu);
    const std::size_t peak = coupling::argmax_energy_density(g);
    const double eps = g.eps_rel()[peak];
    const double v = coupling::mode_volume(g);
    Json j = detail::header("mode-volume");
    j["grid"] = a.grid;
    j["frequency_hz"] = nu.value();
    j["mode_volume_m3"] = v;
    j["eps_rel_at_max"] = eps;
    j["mode_volume_norm"] = coupling::normalized_mode_volume(v, lambda, std::sqrt(eps));
    j["e_zpf_v_per_m"] = coupling::zero_point_field(nu, eps, v);
    j["peak_position_m"] = g.position(peak);
    j["peaks_coincide"] = coupling::peak_positions_coincide(g);
    return j;
}

struct LinkArgs {
    std::string chain;
    std::vector<std::string> elements;
    std::optional<double> db_per_cm;
    std::optional<double> length_cm;
    std::optional<double> measured_total;
    bool table = false;
};

inline std::string link_budget(const LinkArgs& a, const Common&) {
    report::ChainSpec spec;
    if (!a.chain.empty()) spec = report::chain_from_json(detail::read_json_file(a.chain));
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
        spec.elements.push_back(detail::parse_element(a.elements[i], spec.elements.size()));
    }
    if (a.db_per_cm.has_value() != a.length_cm.has_value()) {
        throw UsageError("--db-per-cm and --length-cm go together");
    }
    if (a.db_per_cm) {
        spec.elements.push_back(linkbudget::propagation_element("waveguide", *a.db_per_cm, *a.length_cm));
    }
    if (a.measured_total) spec.measured_total = a.measured_total;
    if (spec.elements.empty()) throw UsageError("link-budget needs --chain, --element or --db-per-cm/--length-cm");
    const auto rep = linkbudget::chain_efficiency(spec.elements, spec.measured_total);
    if (a.table) return linkbudget::format_table(rep);
    Json j = detail::header("link-budget");
    j.update(report::chain_report(rep));
    return j.dump(2) + "\n";
}

struct SyntheticArgs {
    std::string kind = "all";
    std::string out_dir;
    double counts = 1e4;
    double background = 0.0;
    double tau_sigma_ns = 0.15;
    std::size_t detuning_points = 13;
    double detuning_span_ghz = 1500.0;
    double spectrum_noise = 0.005;
};

inline Json gen_synthetic(const SyntheticArgs& a, const Common& c) {
    namespace fs = std::filesystem;
    const std::set<std::string> kinds{"all", "decay", "detuning", "spectrum", "grid"};
    if (!kinds.count(a.kind)) throw UsageError("--kind must be one of all, decay, detuning, spectrum, grid");
    const auto want = [&](const char* k) { return a.kind == "all" || a.kind == k; };
    const fs::path dir(a.out_dir);
    const synthetic::DeviceParams dev;
    Json files = Json::array();

    if (want("decay")) {
        synthetic::DecayTraceSpec s;
        s.amplitude = a.counts;
        s.background = a.background;
        const auto detunings = synthetic::default_trace_detunings_hz();
        const auto traces = synthetic::detuning_traces(dev, detunings, s, c.seed);
        for (std::size_t i = 0; i < traces.size(); ++i) {
            const auto name = "decay_" + std::to_string(std::llround(detunings[i] * 1e-9)) + "ghz.csv";
            io::write_file_atomic(dir / name,
                                  io::trace_csv_string(traces[i], {{"detuning_hz", csv::format_double(detunings[i])},
                                                                   {"seed", std::to_string(c.seed + i)}}));
            files.push_back(name);
        }
    }
    if (want("detuning")) {
        const auto pts = synthetic::tau_detuning_points(
            dev, synthetic::detuning_grid(a.detuning_span_ghz * 1e9, a.detuning_points), a.tau_sigma_ns * 1e-9,
            c.seed);
        std::string text = "# seed: " + std::to_string(c.seed) + "\n";
        text += a.tau_sigma_ns > 0.0 ? "delta_hz,tau_s,sigma_s\n" : "delta_hz,tau_s\n";
        for (const auto& p : pts) {
            text += csv::format_double(p.detuning_hz) + "," + csv::format_double(p.tau_s);
            if (p.sigma_s) text += "," + csv::format_double(*p.sigma_s);
            text += "\n";
        }
        io::write_file_atomic(dir / "tau_detuning.csv", text);
        files.push_back("tau_detuning.csv");
    }
    if (want("spectrum")) {
        synthetic::SpectrumSpec s;
        s.noise = a.spectrum_noise;
        const auto sp = synthetic::two_peak_spectrum(s, c.seed);
        std::string text = "# seed: " + std::to_string(c.seed) + "\nwavelength_nm,intensity\n";
        for (std::size_t i = 0; i < sp.wavelength_nm.size(); ++i) {
            text += csv::format_double(sp.wavelength_nm[i]) + "," + csv::format_double(sp.intensity[i]) + "\n";
        }
        io::write_file_atomic(dir / "spectrum.csv", text);
        files.push_back("spectrum.csv");
    }
    if (want("grid")) {
        io::write_file_atomic(dir / "field_grid.csv",
                              io::field_grid_string(synthetic::apodized_grid(), io::GridEncoding::csv));
        files.push_back("field_grid.csv");
    }
    Json j = detail::header("gen-synthetic");
    j["seed"] = c.seed;
    j["files"] = files;
    return j;
}

// ---------------------------------------------------------------------------

/// Runs one command line (args exclude the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cavity QED analysis: simulation, fitting, coupling and loss budgets", "cqed"};
    app.require_subcommand(1);

    Common common;
    SimulateArgs sim;
    FitDecayArgs fdec;
    FitDetuningArgs fdet;
    FitSpectrumArgs fspec;
    PurcellArgs pur;
    G0Args g0;
    GridArgs ew, mv;
    LinkArgs link;
    SyntheticArgs syn;

    auto* s_sim = app.add_subcommand("simulate-decay", "integrate the atom-cavity master equation");
    s_sim->add_option("--g0-ghz", sim.g0_ghz, "vacuum coupling g0/2pi in GHz");
    s_sim->add_option("--C", sim.cooperativity, "cooperativity (sets g0)")->excludes("--g0-ghz");
    s_sim->add_option("--kappa-ghz", sim.kappa_ghz, "cavity linewidth kappa/2pi in GHz");
    s_sim->add_option("--tau1-ns", sim.tau1_ns, "bare emitter lifetime in ns");
    s_sim->add_option("--gamma-phi", sim.gamma_phi, "pure dephasing rate in 1/s");
    s_sim->add_option("--detuning-ghz", sim.detuning_ghz, "detunings Delta/2pi in GHz")->delimiter(',');
    s_sim->add_option("--n-max", sim.n_max, "Fock-space truncation");
    s_sim->add_option("--bin-ns", sim.bin_ns, "output time bin in ns");
    s_sim->add_option("--horizon-ns", sim.horizon_ns, "simulated duration in ns (default 5 tau1)");
    s_sim->add_option("--integrator", sim.integrator)->check(CLI::IsMember({"adaptive", "fixed"}));
    s_sim->add_option("--trace-dir", sim.trace_dir, "also write one CSV trace per detuning here");
    s_sim->add_option("--from-fit", sim.from_fit, "take C, kappa, tau1 from a fit-detuning result")
        ->excludes("--g0-ghz")
        ->excludes("--C");
    detail::add_common(s_sim, common);

    auto* s_fdec = app.add_subcommand("fit-decay", "fit a single exponential to a decay trace");
    s_fdec->add_option("input", fdec.input, "trace CSV (time_s,value)")->required();
    s_fdec->add_flag("--background", fdec.background, "fit a constant background");
    s_fdec->add_option("--drop-first", fdec.drop_first, "bins to skip at the start");
    detail::add_common(s_fdec, common);

    auto* s_fdet = app.add_subcommand("fit-detuning", "fit tau(Delta) for C, kappa and tau1");
    s_fdet->add_option("input", fdet.input, "CSV (delta_hz,tau_s[,sigma_s])")->required();
    detail::add_common(s_fdet, common);

    auto* s_fspec = app.add_subcommand("fit-spectrum", "fit a PL spectrum or a transmission curve");
    s_fspec->add_option("input", fspec.input, "CSV (x,y[,sigma]); wavelengths in nm")->required();
    s_fspec->add_option("--model", fspec.model)
        ->check(CLI::IsMember({"lorentzian-plus-gaussian", "tanh-transmission", "exponential-saturation",
                               "asymmetric-lorentzian"}));
    s_fspec->add_option("--cavity-hint-nm", fspec.cavity_hint_nm);
    s_fspec->add_option("--zpl-hint-nm", fspec.zpl_hint_nm);
    s_fspec->add_option("--init", fspec.init, "initial parameters (transmission models)")->delimiter(',');
    detail::add_common(s_fspec, common);

    auto* s_pur = app.add_subcommand("purcell", "ZPL cooperativity and Purcell factors");
    s_pur->add_option("--C", pur.cooperativity, "cooperativity");
    s_pur->add_option("--eta-qe", pur.eta_qe, "quantum efficiency");
    s_pur->add_option("--eta-dw", pur.eta_dw, "Debye-Waller factors")->delimiter(',');
    s_pur->add_option("--tau-on-ns", pur.tau_on_ns, "on-resonance lifetime in ns");
    s_pur->add_option("--tau-off-ns", pur.tau_off_ns, "far-detuned lifetime in ns");
    detail::add_common(s_pur, common);

    auto* s_g0 = app.add_subcommand("g0", "dipole, zero-point field and vacuum coupling");
    s_g0->add_option("--tau1-ns", g0.tau1_ns, "emitter lifetime in ns");
    s_g0->add_option("--freq-thz", g0.freq_thz, "cavity frequency in THz (default 475)");
    s_g0->add_option("--wavelength-nm", g0.wavelength_nm, "cavity wavelength in nm");
    s_g0->add_option("--eps", g0.eps, "relative permittivity at the field maximum");
    s_g0->add_option("--v-norm", g0.v_norm, "mode volume in (lambda/n)^3");
    s_g0->add_option("--grid", g0.grid, "field grid file (replaces --eps/--v-norm)");
    s_g0->add_option("--eta-dw", g0.eta_dw, "Debye-Waller factors")->delimiter(',');
    s_g0->add_option("--weighting", g0.weighting, "ensemble weighting factor");
    s_g0->add_option("--threshold", g0.threshold, "weighting threshold fraction (with --grid)");
    detail::add_common(s_g0, common);

    auto* s_ew = app.add_subcommand("ensemble-weight", "ensemble weighting factor of a field grid");
    s_ew->add_option("grid", ew.grid, "field grid file")->required();
    s_ew->add_option("--threshold", ew.threshold, "|E| threshold as a fraction of |E_max|");
    s_ew->add_option("--region-nm", ew.region_nm, "half-widths x,y,z of the emitter region")->delimiter(',');
    s_ew->add_flag("--whole-grid", ew.whole_grid, "use every grid point");
    detail::add_common(s_ew, common);

    auto* s_mv = app.add_subcommand("mode-volume", "mode volume and zero-point field of a field grid");
    s_mv->add_option("grid", mv.grid, "field grid file")->required();
    s_mv->add_option("--freq-thz", mv.freq_thz, "cavity frequency in THz (default 475)");
    s_mv->add_option("--wavelength-nm", mv.wavelength_nm, "cavity wavelength in nm");
    detail::add_common(s_mv, common);

    auto* s_link = app.add_subcommand("link-budget", "cascaded transmission budget");
    s_link->add_option("--chain", link.chain, "chain JSON file");
    s_link->add_option("--element", link.elements, "name:efficiency=x | name:loss_db=x | ...");
    s_link->add_option("--db-per-cm", link.db_per_cm, "propagation loss in dB/cm");
    s_link->add_option("--length-cm", link.length_cm, "propagation length in cm");
    s_link->add_option("--measured-total", link.measured_total, "measured end-to-end efficiency");
    s_link->add_flag("--table", link.table, "print an aligned text table instead of JSON");
    detail::add_common(s_link, common);

    auto* s_syn = app.add_subcommand("gen-synthetic", "write the synthetic fixture datasets");
    s_syn->add_option("--kind", syn.kind, "all | decay | detuning | spectrum | grid");
    s_syn->add_option("--out-dir", syn.out_dir, "output directory")->required();
    s_syn->add_option("--counts", syn.counts, "expected counts in the first decay bin");
    s_syn->add_option("--background", syn.background, "expected background counts per bin");
    s_syn->add_option("--tau-sigma-ns", syn.tau_sigma_ns, "noise on tau(Delta) points in ns");
    s_syn->add_option("--detuning-points", syn.detuning_points, "number of tau(Delta) points");
    s_syn->add_option("--detuning-span-ghz", syn.detuning_span_ghz, "tau(Delta) detuning half-span in GHz");
    s_syn->add_option("--spectrum-noise", syn.spectrum_noise, "Gaussian noise on the spectrum");
    detail::add_common(s_syn, common);

    std::vector<const char*> argv{"cqed"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (s_sim->parsed()) detail::emit(common, simulate_decay(sim, common), out);
        else if (s_fdec->parsed()) detail::emit(common, fit_decay(fdec, common), out);
        else if (s_fdet->parsed()) detail::emit(common, fit_detuning(fdet, common), out);
        else if (s_fspec->parsed()) detail::emit(common, fit_spectrum(fspec, common), out);
        else if (s_pur->parsed()) detail::emit(common, purcell_cmd(pur, common), out);
        else if (s_g0->parsed()) detail::emit(common, g0_cmd(g0, common), out);
        else if (s_ew->parsed()) detail::emit(common, ensemble_weight(ew, common), out);
        else if (s_mv->parsed()) detail::emit(common, mode_volume_cmd(mv, common), out);
        else if (s_link->parsed()) detail::emit(common, link_budget(link, common), out);
        else if (s_syn->parsed()) detail::emit(common, gen_synthetic(syn, common), out);
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const IntegrationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace cqed::cli
