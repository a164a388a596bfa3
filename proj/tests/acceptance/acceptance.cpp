// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cqed/cli.hpp"
#include "cqed/coupling.hpp"
#include "cqed/dynamics.hpp"
#include "cqed/fits.hpp"
#include "cqed/linkbudget.hpp"
#include "cqed/purcell.hpp"
#include "cqed/synthetic.hpp"

using namespace cqed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back(what);
        }
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

bool within_rel(double v, double target, double rel) { return std::abs(v / target - 1.0) <= rel; }

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

// --- 1 ---------------------------------------------------------------------
Outcome purcell_pins() {
    Outcome o;
    const double c_zpl[] = {7.0, 4.67}, f_zpl[] = {8.0, 5.67}, dw[] = {0.02, 0.03};
    for (int i = 0; i < 2; ++i) {
        const auto r = purcell::zpl_quantities_from_C(0.14, {1.0, dw[i]});
        o.require(within_rel(r.zpl_cooperativity, c_zpl[i], 0.01), "C_ZPL " + num(r.zpl_cooperativity));
        o.require(within_rel(r.zpl_purcell, f_zpl[i], 0.01), "F_ZPL " + num(r.zpl_purcell));
    }
    return o;
}

// --- 2 ---------------------------------------------------------------------
Outcome minimum_lifetime() {
    Outcome o;
    const double tau = dynamics::tau_of_detuning(0.14, gigahertz(940), nanoseconds(15.9), hertz(0)).value();
    o.require(within_rel(tau, 13.95e-9, 0.005), "tau(0) " + num(tau));
    o.require(within_rel(tau, 14.0e-9, 0.005), "tau(0) vs 14.0 ns: " + num(tau));
    return o;
}

// --- 3 ---------------------------------------------------------------------
Outcome coupling_chain() {
    Outcome o;
    const auto nu = terahertz(475);
    const auto d = coupling::dipole_from_lifetime(nanoseconds(16), nu);
    o.require(within_rel(d.coulomb_meters, 2.4e-29, 0.03), "dipole " + num(d.coulomb_meters));
    o.require(within_rel(d.debye(), 7.1, 0.03), "dipole " + num(d.debye()) + " D");
    const double lam = wavelength_from_frequency(nu);
    const double v = 0.5 * std::pow(lam / std::sqrt(5.7), 3);
    const double e = coupling::zero_point_field(nu, 5.7, v);
    o.require(within_rel(e, 5.8e5, 0.03), "E_zpf " + num(e));
    double lo = 1e300, hi = 0.0;
    for (double dw = 0.02; dw <= 0.03 + 1e-12; dw += 0.0025) {
        const double g = coupling::g0_ideal(coupling::EmitterDipole{nanoseconds(16), nu, dw}.zpl(), e).value();
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    o.require(lo >= 2.9e9 * 0.95 && hi <= 3.5e9 * 1.05, "g0 range [" + num(lo) + ", " + num(hi) + "]");
    o.notes.push_back("g0/2pi " + num(lo * 1e-9) + "-" + num(hi * 1e-9) + " GHz");
    return o;
}

// --- 4 ---------------------------------------------------------------------
Outcome link_budget() {
    Outcome o;
    using namespace linkbudget;
    const double prop = propagation_efficiency(1.9, 0.35).value();
    o.require(prop >= 0.85 && prop <= 0.86, "propagation " + num(prop));
    const double db = linear_to_db(0.197);
    o.require(std::abs(db + 7.06) < 0.005, "0.197 -> " + num(db) + " dB");
    const auto rep = chain_efficiency({efficiency_element("taper", 0.8), propagation_element("waveguide", 1.9, 0.35),
                                       efficiency_element("collection", 0.197)});
    o.require(std::abs(rep.total_efficiency - 0.135) < 0.001, "chain " + num(rep.total_efficiency));
    o.require(std::abs(rep.total_db - linear_to_db(rep.total_efficiency)) < 1e-12, "dB sum vs product");
    return o;
}

// --- 5 ---------------------------------------------------------------------
dynamics::AtomCavityParams device(double detuning_over_kappa) {
    dynamics::AtomCavityParams p;
    p.g0 = gigahertz(0.57);
    p.kappa = gigahertz(940);
    p.gamma1 = 1.0 / 15.9e-9;
    p.detuning = gigahertz(940 * detuning_over_kappa);
    return p;
}

Outcome oracle_equivalence() {
    Outcome o;
    const auto grid = dynamics::uniform_time_grid(nanoseconds(1.28), nanoseconds(5 * 15.9));
    double worst = 0.0, worst_closure = 0.0;
    for (double r : {0.0, 0.25, 0.5, 1.0, 2.0}) {
        const auto p = device(r);
        const auto t1 = dynamics::evolve_master_equation(p, 1, grid);
        const auto t2 = dynamics::evolve_master_equation(p, 2, grid);
        const double rel = std::abs(dynamics::extract_decay_rate(t1).rate / dynamics::analytic_total_rate(p) - 1.0);
        worst = std::max(worst, rel);
        o.require(rel < 0.02, "Delta/kappa " + num(r) + ": rate off by " + num(rel));
        for (std::size_t i = 0; i < t1.size(); ++i) {
            worst_closure = std::max(worst_closure, std::abs(t1.values[i] - t2.values[i]));
        }
    }
    o.require(worst_closure < 1e-7, "N_max 1 vs 2 differ by " + num(worst_closure));
    o.notes.push_back("max rate deviation " + num(worst) + ", N_max difference " + num(worst_closure));
    return o;
}

// --- 6 ---------------------------------------------------------------------
Outcome structural_invariants() {
    Outcome o;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double tol = 1e-8;
    const auto grid = dynamics::uniform_time_grid(nanoseconds(1.28), nanoseconds(20));
    for (int s = 0; s < 20; ++s) {
        dynamics::AtomCavityParams p;
        p.kappa = gigahertz(10.0 + 990.0 * u(rng));
        p.g0 = gigahertz(5.0 * u(rng));
        p.gamma1 = 1.0 / nanoseconds(5.0 + 25.0 * u(rng)).value();
        p.gamma_phi = 1e9 * u(rng);
        p.detuning = p.kappa * (4.0 * u(rng) - 2.0);
        dynamics::EvolveOptions opt;
        opt.n_max = 1 + s % 2;
        opt.rel_tol = tol;
        const auto ev = dynamics::evolve_density(p, grid, opt);
        const double tr = *std::max_element(ev.trace_deviation.begin(), ev.trace_deviation.end());
        const double herm = *std::max_element(ev.hermiticity_error.begin(), ev.hermiticity_error.end());
        const double eig = *std::min_element(ev.min_eigenvalue.begin(), ev.min_eigenvalue.end());
        o.require(tr < 10 * tol, "set " + std::to_string(s) + " trace " + num(tr));
        o.require(herm < 10 * tol, "set " + std::to_string(s) + " hermiticity " + num(herm));
        o.require(eig > -100 * tol, "set " + std::to_string(s) + " eigenvalue " + num(eig));
    }
    auto p = device(0.0);
    p.g0 = hertz(0);
    const auto t = dynamics::evolve_master_equation(p, 1, dynamics::uniform_time_grid(nanoseconds(1.28), nanoseconds(80)));
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) err = std::max(err, std::abs(t.values[i] - std::exp(-p.gamma1 * t.times[i])));
    o.require(err < 1e-8, "g0 = 0 deviation " + num(err));
    return o;
}

// --- 7 ---------------------------------------------------------------------
Outcome fit_round_trips() {
    using namespace fitting;
    Outcome o;
    struct Case {
        FitModel model;
        std::vector<double> x, truth, scale;
    };
    const std::vector<Case> cases{
        {FitModel::tau_detuning(), linspace(-2e12, 2e12, 9), {0.14, 940e9, 15.9e-9}, {}},
        {FitModel::single_exponential(false), linspace(0, 100e-9, 80), {1e4, 13.95e-9}, {}},
        {FitModel::single_exponential(true), linspace(0, 100e-9, 80), {1e4, 13.95e-9, 40.0}, {}},
        {FitModel::lorentzian_plus_gaussian(637.0), linspace(630, 644, 281),
         {1.0, 636.0, 1.33, 0.6, 637.2, 0.35, 0.05, 0.0}, {0, 0.4, 0, 0, 0.1, 0, 0, 0.01}},
        {FitModel::tanh_transmission(), linspace(-5, 5, 101), {0.9, 2.0, 0.5}, {}},
        {FitModel::exponential_saturation(), linspace(0, 15, 61), {0.8, 3.0}, {}},
        {FitModel::asymmetric_lorentzian(), linspace(-6, 6, 121), {1.0, 0.5, 0.8, 1.6}, {0, 0.3, 0, 0}},
    };
    double worst = 0.0;
    for (const auto& c : cases) {
        std::vector<double> y;
        for (double v : c.x) y.push_back(c.model.eval(v, c.truth));
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            std::mt19937_64 rng(seed);
            std::bernoulli_distribution sign(0.5);
            auto init = c.truth;
            for (std::size_t i = 0; i < init.size(); ++i) {
                const double s = c.scale.empty() || c.scale[i] == 0.0 ? std::abs(c.truth[i]) : c.scale[i];
                init[i] += (sign(rng) ? 0.3 : -0.3) * s;
            }
            FitOptions opt;
            opt.allow_singular = true;
            const auto r = least_squares_fit(c.model, c.x, y, {}, init, opt);
            for (std::size_t i = 0; i < c.truth.size(); ++i) {
                const double ref = std::max(std::abs(c.truth[i]), 1e-3 * std::abs(c.truth[0]));
                worst = std::max(worst, std::abs(r.params[i] - c.truth[i]) / ref);
            }
        }
    }
    o.require(worst < 1e-6, "round-trip error " + num(worst));

    const double tau = 13.95e-9;
    synthetic::DecayTraceSpec spec;
    double mean = 0.0;
    int in_band = 0;
    std::vector<double> err;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto r = fit_decay_trace(synthetic::noisy_decay(Duration(tau), spec, seed));
        mean += r.reduced_chi2 / 100.0;
        in_band += r.reduced_chi2 >= 0.5 && r.reduced_chi2 <= 1.5;
        err.push_back(std::abs(r.param("tau") / tau - 1.0));
    }
    std::sort(err.begin(), err.end());
    o.require(mean >= 0.5 && mean <= 1.5, "mean reduced chi2 " + num(mean));
    o.require(in_band >= 95, std::to_string(in_band) + "/100 seeds with reduced chi2 in [0.5, 1.5]");
    o.require(err[94] < 0.02, "95th percentile tau error " + num(err[94]));
    o.notes.push_back("round-trip " + num(worst) + ", mean chi2_r " + num(mean) + ", " + std::to_string(in_band) +
                      "/100 in band, tau p95 " + num(err[94]));
    return o;
}

// --- 8 ---------------------------------------------------------------------
Outcome ensemble_weighting() {
    using namespace coupling;
    Outcome o;
    const WeightingConfig whole0{0.0, Region::everywhere()};
    {
        const FieldGrid g({3, 3, 3}, {1e-8, 1e-8, 1e-8}, {0, 0, 0}, std::vector<Vec3>(27, Vec3{0, 0, 1}),
                          std::vector<double>(27, 5.7));
        const double f = ensemble_weighting_factor(g, whole0);
        o.require(std::abs(f - 1.0 / std::sqrt(3.0)) < 1e-12, "uniform " + num(f));
    }
    {
        std::vector<Vec3> f(8);
        for (std::size_t i = 0; i < 8; ++i) f[i] = i < 4 ? Vec3{1, 0, 0} : Vec3{0, 0.5, 0};
        const FieldGrid g({2, 2, 2}, {1e-8, 1e-8, 1e-8}, {0, 0, 0}, f, std::vector<double>(8, 1.0));
        const double v = ensemble_weighting_factor(g, whole0);
        o.require(std::abs(v - 0.5) < 1e-15, "two-level case " + num(v));
    }
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> dim(2, 7);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < 20; ++s) {
        const std::array<std::size_t, 3> dims{dim(rng), dim(rng), dim(rng)};
        std::vector<Vec3> f(dims[0] * dims[1] * dims[2]);
        for (auto& v : f) v = {gauss(rng), gauss(rng), gauss(rng)};
        const FieldGrid g(dims, {5e-9, 5e-9, 5e-9}, {0, 0, 0}, f, std::vector<double>(f.size(), 5.7));
        double prev = 0.0;
        for (int k = 0; k < 20; ++k) {
            const double v = ensemble_weighting_factor(g, {0.05 * k, Region::everywhere()});
            o.require(v >= prev - 1e-15, "grid " + std::to_string(s) + " not monotone at " + num(0.05 * k));
            o.require(v > 0.0 && v <= 1.0 / std::sqrt(3.0) + 1e-15, "grid " + std::to_string(s) + " F " + num(v));
            prev = v;
        }
    }
    const double coarse = ensemble_weighting_factor(sample_grid(ApodizedStandingWave{}, {24, 9, 6}, {20e-9, 20e-9, 20e-9}), {});
    const double fine = ensemble_weighting_factor(sample_grid(ApodizedStandingWave{}, {48, 18, 12}, {10e-9, 10e-9, 10e-9}), {});
    o.require(std::abs(coarse / fine - 1.0) < 0.01, "refinement " + num(coarse) + " -> " + num(fine));
    o.notes.push_back("synthetic mode F " + num(fine) + " at threshold 0.2");
    return o;
}

// --- 9 ---------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Runs a command with "@DIR" standing for a fresh output directory; returns
// stdout followed by every file written there, with the directory masked.
std::string capture(const std::vector<std::string>& args, const fs::path& dir, int& code) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<std::string> a;
    for (const auto& s : args) a.push_back(s.rfind("@DIR", 0) == 0 ? dir.string() + s.substr(4) : s);
    std::ostringstream out, err;
    code = cli::run(a, out, err);
    std::string all = out.str();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += "\n== " + fs::relative(f, dir).string() + "\n" + slurp(f);
    for (std::size_t p; (p = all.find(dir.string())) != std::string::npos;) all.replace(p, dir.string().size(), "@DIR");
    return all;
}

Outcome determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "cqed_acceptance";
    const fs::path data = root / "data";
    fs::remove_all(root);
    fs::create_directories(data);
    {
        std::ostringstream out, err;
        const int code = cli::run({"gen-synthetic", "--out-dir", data.string(), "--seed", "3"}, out, err);
        o.require(code == 0, "fixture generation failed: " + err.str());
    }
    const auto d = [&](const char* n) { return (data / n).string(); };
    {
        std::ofstream chain(data / "chain.json");
        chain << R"({"elements": [{"name": "taper", "efficiency": 0.8, "sigma_efficiency": 0.05},)"
              << R"( {"name": "waveguide", "loss_db_per_cm": 1.9, "length_cm": 0.35},)"
              << R"( {"name": "collection", "efficiency": 0.197}], "measured_total": 0.1})";
    }
    const std::vector<std::vector<std::string>> commands{
        {"simulate-decay", "--detuning-ghz", "0,470", "--n-max", "1", "--horizon-ns", "30", "--trace-dir", "@DIR"},
        {"fit-decay", d("decay_250ghz.csv"), "--background"},
        {"fit-detuning", d("tau_detuning.csv"), "--out", "@DIR/fit.json"},
        {"fit-spectrum", d("spectrum.csv")},
        {"purcell", "--C", "0.14", "--tau-on-ns", "13.95", "--tau-off-ns", "15.9"},
        {"g0", "--grid", d("field_grid.csv"), "--threshold", "0.2"},
        {"ensemble-weight", d("field_grid.csv")},
        {"mode-volume", d("field_grid.csv")},
        {"link-budget", "--chain", d("chain.json"), "--table"},
        {"gen-synthetic", "--out-dir", "@DIR", "--seed", "5"},
    };
    for (const auto& c : commands) {
        int code_a = 0, code_b = 0;
        const fs::path dir_a = root / (c[0] + "_a"), dir_b = root / (c[0] + "_b");
        const std::string a = capture(c, dir_a, code_a);
        const std::string b = capture(c, dir_b, code_b);
        o.require(code_a == 0 && code_b == 0, c[0] + " exited with " + std::to_string(code_a));
        o.require(a == b, c[0] + " output differs between runs");
    }
    fs::remove_all(root);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1 Purcell algebra pins", purcell_pins},
        {"AC2 minimum lifetime", minimum_lifetime},
        {"AC3 coupling chain", coupling_chain},
        {"AC4 link budget pins", link_budget},
        {"AC5 master equation vs analytic rate", oracle_equivalence},
        {"AC6 master equation invariants", structural_invariants},
        {"AC7 fit round-trips and calibration", fit_round_trips},
        {"AC8 ensemble weighting", ensemble_weighting},
        {"AC9 CLI determinism", determinism},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("exception: ") + e.what());
        }
        std::string line = name.substr(0, 3) + (o.pass ? " PASS " : " FAIL ") + name.substr(4);
        if (!o.notes.empty()) {
            line += " (";
            for (std::size_t i = 0; i < o.notes.size(); ++i) line += (i ? "; " : "") + o.notes[i];
            line += ")";
        }
        std::cout << line << '\n';
        failures += !o.pass;
    }
    return failures;
}
