#pragma once

// Open-system dynamics of a two-level emitter coupled to a lossy cavity mode,
// and its weak-excitation analytic reduction.
//
// Model (hbar = 1, frame rotating at the cavity frequency):
//
//   H   = -Delta s+s + g0 (s+ c + s c+)
//   d/dt rho = -i[H, rho] + gamma1 D[s] + 2 gamma_phi D[s+s] + kappa D[c]
//   D[L] rho = L rho L+ - 1/2 {L+L, rho}
//
// g0, kappa and Delta are supplied as ordinary frequencies and multiplied by
// 2pi here; gamma1 and gamma_phi are inverse lifetimes in 1/s and enter as-is.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <future>
#include <optional>
#include <span>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cqed/errors.hpp"
#include "cqed/ode.hpp"
#include "cqed/quantities.hpp"

namespace cqed::dynamics {

using cplx = std::complex<double>;

struct AtomCavityParams {
    OrdinaryFrequency g0{};         // vacuum coupling g0/2pi
    OrdinaryFrequency kappa{};      // total cavity energy decay rate kappa/2pi
    double gamma1 = 0.0;            // emitter population decay, 1/s
    double gamma_phi = 0.0;         // pure dephasing, 1/s
    OrdinaryFrequency detuning{};   // cavity minus emitter, signed

    /// Coherence decay rate, always derived from gamma1 and gamma_phi.
    double gamma2() const { return 0.5 * gamma1 + gamma_phi; }

    void validate() const {
        if (!(g0.value() >= 0.0) || !(kappa.value() >= 0.0) || !(gamma1 >= 0.0) ||
            !(gamma_phi >= 0.0)) {
            throw DomainError("g0, kappa, gamma1 and gamma_phi must be non-negative");
        }
        if (!std::isfinite(g0.value() + kappa.value() + gamma1 + gamma_phi + detuning.value())) {
            throw DomainError("atom-cavity parameters must be finite");
        }
    }
};

enum class TraceKind { simulated, measured };

/// Time-binned excited-state population (simulated) or photon counts (measured).
struct DecayTrace {
    std::vector<double> times;
    std::vector<double> values;
    Duration bin_width{1.28e-9};
    TraceKind kind = TraceKind::simulated;

    std::size_t size() const { return times.size(); }

    void validate() const {
        if (times.size() != values.size()) throw DomainError("trace times/values length mismatch");
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1])) throw DomainError("trace times must be strictly increasing");
        }
        for (double v : values) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("trace values must be finite and >= 0");
            if (kind == TraceKind::simulated && v > 1.0 + 1e-9) {
                throw DomainError("simulated population exceeds 1");
            }
        }
    }
};

/// Dense density matrix over (two-level atom) x (Fock space up to n_max).
/// Basis index is atom * (n_max + 1) + n, atom 0 = ground, 1 = excited.
class DensityState {
public:
    DensityState(Eigen::MatrixXcd rho, int n_max) : rho_(std::move(rho)), n_max_(n_max) {}

    const Eigen::MatrixXcd& matrix() const { return rho_; }
    int n_max() const { return n_max_; }

    double trace() const { return rho_.trace().real(); }

    double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        const Eigen::MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    double excited_population() const {
        const int nf = n_max_ + 1;
        double p = 0.0;
        for (int n = 0; n < nf; ++n) p += rho_(nf + n, nf + n).real();
        return p;
    }

    double photon_number() const {
        const int nf = n_max_ + 1;
        double p = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int n = 0; n < nf; ++n) p += n * rho_(a * nf + n, a * nf + n).real();
        return p;
    }

private:
    Eigen::MatrixXcd rho_;
    int n_max_;
};

enum class Integrator { adaptive, fixed_step };

struct EvolveOptions {
    int n_max = 1;
    double rel_tol = 1e-8;
    std::optional<double> abs_tol;   // default: rel_tol / 100
    Integrator integrator = Integrator::adaptive;
    std::size_t max_steps = 20'000'000;
};

struct EvolutionResult {
    DecayTrace trace;
    std::vector<double> trace_deviation;    // |Tr rho - 1|
    std::vector<double> hermiticity_error;  // max |rho - rho+|
    std::vector<double> min_eigenvalue;
    ode::Statistics stats;
};

namespace detail {

inline Eigen::MatrixXcd lowering_atom(int n_max) {
    const int nf = n_max + 1;
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2 * nf, 2 * nf);
    for (int n = 0; n < nf; ++n) s(n, nf + n) = 1.0;
    return s;
}

inline Eigen::MatrixXcd annihilation(int n_max) {
    const int nf = n_max + 1;
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2 * nf, 2 * nf);
    for (int a = 0; a < 2; ++a)
        for (int n = 1; n < nf; ++n) c(a * nf + n - 1, a * nf + n) = std::sqrt(static_cast<double>(n));
    return c;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace detail

/// Rotating-frame Hamiltonian in rad/s.
inline Eigen::MatrixXcd hamiltonian(const AtomCavityParams& p, int n_max) {
    const Eigen::MatrixXcd s = detail::lowering_atom(n_max);
    const Eigen::MatrixXcd c = detail::annihilation(n_max);
    const double delta = to_angular(p.detuning).value();
    const double g = to_angular(p.g0).value();
    return -delta * (s.adjoint() * s) + g * (s.adjoint() * c + s * c.adjoint());
}

/// Liouvillian acting on column-stacked vec(rho): vec(A rho B) = (B^T kron A) vec(rho).
inline Eigen::SparseMatrix<cplx> liouvillian(const AtomCavityParams& p, int n_max) {
    p.validate();
    if (n_max < 1) throw DomainError("n_max must be at least 1");
    const Eigen::MatrixXcd s = detail::lowering_atom(n_max);
    const Eigen::MatrixXcd c = detail::annihilation(n_max);
    const Eigen::MatrixXcd h = hamiltonian(p, n_max);
    const auto dim = h.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
    const cplx i_unit(0.0, 1.0);

    Eigen::MatrixXcd l = -i_unit * (detail::kron(id, h) - detail::kron(h.transpose(), id));
    auto add_dissipator = [&](const Eigen::MatrixXcd& op, double rate) {
        if (rate == 0.0) return;
        const Eigen::MatrixXcd ldl = op.adjoint() * op;
        l += rate * (detail::kron(op.conjugate(), op) - 0.5 * detail::kron(id, ldl) -
                     0.5 * detail::kron(ldl.transpose(), id));
    };
    add_dissipator(s, p.gamma1);
    add_dissipator(s.adjoint() * s, 2.0 * p.gamma_phi);
    add_dissipator(c, to_angular(p.kappa).value());

    return l.sparseView(1.0, 0.0);
}

/// |e, 0><e, 0|.
inline Eigen::MatrixXcd excited_vacuum(int n_max) {
    const int nf = n_max + 1;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2 * nf, 2 * nf);
    rho(nf, nf) = 1.0;
    return rho;
}

/// Output grid 0, dt, 2 dt, ... up to `horizon` (inclusive when it falls on the grid).
inline std::vector<double> uniform_time_grid(Duration bin_width, Duration horizon) {
    if (!(bin_width.value() > 0.0) || !(horizon.value() > 0.0)) {
        throw DomainError("bin width and horizon must be positive");
    }
    const auto n = static_cast<std::size_t>(std::floor(horizon / bin_width * (1.0 + 1e-12))) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * bin_width.value();
    return t;
}

/// Integrates the master equation from |e,0><e,0| and reports the excited-state
/// population plus the structural diagnostics of rho at every output time.
inline EvolutionResult evolve_density(const AtomCavityParams& p, std::span<const double> t_grid,
                                      const EvolveOptions& opt = {}) {
    p.validate();
    if (!(opt.rel_tol > 0.0)) throw DomainError("rel_tol must be positive");
    if (opt.n_max < 1 || opt.n_max > 4) throw DomainError("n_max must be in [1, 4]");
    if (t_grid.empty()) throw DomainError("empty time grid");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1])) throw DomainError("time grid must be strictly increasing");
    }

    const int n_max = opt.n_max;
    const Eigen::SparseMatrix<cplx, Eigen::RowMajor> lv = liouvillian(p, n_max);
    const Eigen::MatrixXcd rho0 = excited_vacuum(n_max);
    const auto dim = rho0.rows();
    Eigen::VectorXcd y = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), dim * dim);

    EvolutionResult out;
    out.trace.kind = TraceKind::simulated;
    out.trace.bin_width = Duration(t_grid.size() > 1 ? t_grid[1] - t_grid[0] : 0.0);

    auto rhs = [&lv](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& dv) { dv.noalias() = lv * v; };
    auto observe = [&](double t, const Eigen::VectorXcd& v) {
        const DensityState state(Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim), n_max);
        out.trace.times.push_back(t);
        // Integration noise can push a vanishing population a hair below zero.
        out.trace.values.push_back(std::clamp(state.excited_population(), 0.0, 1.0));
        out.trace_deviation.push_back(std::abs(state.trace() - 1.0));
        out.hermiticity_error.push_back(state.hermiticity_error());
        out.min_eigenvalue.push_back(state.min_eigenvalue());
    };

    if (opt.integrator == Integrator::adaptive) {
        ode::AdaptiveOptions ao;
        ao.rel_tol = opt.rel_tol;
        ao.abs_tol = opt.abs_tol.value_or(opt.rel_tol * 1e-2);
        ao.max_steps = opt.max_steps;
        out.stats = ode::integrate_dopri5(rhs, y, t_grid, ao, observe);
    } else {
        const double kappa = to_angular(p.kappa).value();
        const double fastest = std::max({kappa, p.gamma1 + 2.0 * p.gamma_phi,
                                         std::abs(to_angular(p.detuning).value()),
                                         to_angular(p.g0).value()});
        if (!(fastest > 0.0)) throw DomainError("fixed-step integration needs a nonzero rate");
        out.stats = ode::integrate_rk4_fixed(rhs, y, t_grid, 0.1 / fastest, observe);
    }
    return out;
}

/// Excited-state population <s+ s>(t) on `t_grid`.
inline DecayTrace evolve_master_equation(const AtomCavityParams& p, int n_max,
                                         std::span<const double> t_grid, double rel_tol = 1e-8) {
    EvolveOptions opt;
    opt.n_max = n_max;
    opt.rel_tol = rel_tol;
    return evolve_density(p, t_grid, opt).trace;
}

/// Runs one simulation per detuning concurrently; results follow input order.
inline std::vector<DecayTrace> simulate_detuning_sweep(const AtomCavityParams& base,
                                                       std::span<const OrdinaryFrequency> detunings,
                                                       std::span<const double> t_grid,
                                                       const EvolveOptions& opt = {}) {
    std::vector<std::future<DecayTrace>> jobs;
    jobs.reserve(detunings.size());
    const std::vector<double> grid(t_grid.begin(), t_grid.end());
    for (const auto d : detunings) {
        AtomCavityParams p = base;
        p.detuning = d;
        jobs.push_back(std::async(std::launch::async,
                                  [p, &grid, opt] { return evolve_density(p, grid, opt).trace; }));
    }
    std::vector<DecayTrace> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

// ---------------------------------------------------------------------------
// Weak-excitation reduction

/// C = 4 g0^2 / (kappa gamma1) with g0 and kappa in angular units.
inline double cooperativity(const AtomCavityParams& p) {
    p.validate();
    if (!(p.kappa.value() > 0.0) || !(p.gamma1 > 0.0)) {
        throw DomainError("cooperativity needs positive kappa and gamma1");
    }
    const double g = to_angular(p.g0).value();
    return 4.0 * g * g / (to_angular(p.kappa).value() * p.gamma1);
}

/// g0/2pi implied by a cooperativity, cavity linewidth and emitter decay rate.
inline OrdinaryFrequency g0_from_cooperativity(double c, OrdinaryFrequency kappa, double gamma1) {
    if (!(c >= 0.0) || !(kappa.value() > 0.0) || !(gamma1 > 0.0)) {
        throw DomainError("g0 from cooperativity needs C >= 0, kappa > 0, gamma1 > 0");
    }
    return to_ordinary(AngularFrequency(std::sqrt(c * to_angular(kappa).value() * gamma1 / 4.0)));
}

/// gamma1 + g0^2 kappa / ((kappa/2)^2 + Delta^2), in 1/s.
inline double analytic_total_rate(const AtomCavityParams& p) {
    p.validate();
    if (!(p.kappa.value() > 0.0)) throw DomainError("analytic rate needs kappa > 0");
    const double g = to_angular(p.g0).value();
    const double k = to_angular(p.kappa).value();
    const double d = to_angular(p.detuning).value();
    return p.gamma1 + g * g * k / (0.25 * k * k + d * d);
}

/// f(Delta) = 1 / (1 + 4 Delta^2 / kappa^2). Convention-free: both arguments
/// only need to share units.
inline double spectral_mismatch(OrdinaryFrequency kappa, OrdinaryFrequency detuning) {
    if (!(kappa.value() > 0.0)) throw DomainError("spectral mismatch needs kappa > 0");
    const double r = detuning / kappa;
    return 1.0 / (1.0 + 4.0 * r * r);
}

/// tau(Delta) = tau1 / (C f(Delta) + 1).
inline Duration tau_of_detuning(double c, OrdinaryFrequency kappa, Duration tau1,
                                OrdinaryFrequency detuning) {
    if (!(c >= 0.0) || !(tau1.value() > 0.0)) {
        throw DomainError("tau(Delta) needs C >= 0 and tau1 > 0");
    }
    return tau1 / (c * spectral_mismatch(kappa, detuning) + 1.0);
}

// ---------------------------------------------------------------------------
// Decay-rate extraction

enum class NonPositivePolicy { shrink_window, error };

struct RateExtractionOptions {
    std::optional<std::pair<double, double>> window;  // seconds; default [0.5, 3] tau_est
    NonPositivePolicy on_nonpositive = NonPositivePolicy::shrink_window;
    std::optional<bool> value_weights;                // default: true for measured traces
    double curvature_threshold = 0.02;
    std::size_t min_samples = 10;
};

struct DecayRateEstimate {
    double rate = 0.0;        // 1/s
    double std_error = 0.0;   // 1/s
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t n_samples = 0;
    double curvature = 0.0;   // |quadratic term| of log(value) across the window
    bool curvature_flag = false;
    std::vector<std::string> warnings;
};

namespace detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
};

inline LineFit weighted_line(std::span<const double> x, std::span<const double> y,
                             std::span<const double> w) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw DomainError("regression window has no spread in time");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += w[i] * r * r;
    }
    const double dof = static_cast<double>(x.size()) - 2.0;
    f.slope_se = dof > 0.0 ? std::sqrt(ssr / dof / sxx) : 0.0;
    return f;
}

// Quadratic coefficient of a weighted fit on u in [-1, 1].
inline double weighted_quadratic_term(std::span<const double> u, std::span<const double> y,
                                      std::span<const double> w) {
    Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Eigen::Vector3d phi(1.0, u[i], u[i] * u[i]);
        a += w[i] * phi * phi.transpose();
        b += w[i] * y[i] * phi;
    }
    return a.ldlt().solve(b)(2);
}

}  // namespace detail

/// Weighted log-linear regression of the trace over a window. Returns -slope
/// and its standard error; flags residual curvature of log(value) (flat
/// backgrounds or multi-exponential decays) above `curvature_threshold`.
inline DecayRateEstimate extract_decay_rate(const DecayTrace& trace,
                                            const RateExtractionOptions& opt = {}) {
    trace.validate();
    const bool use_value_weights = opt.value_weights.value_or(trace.kind == TraceKind::measured);
    DecayRateEstimate est;

    double t_lo = 0.0, t_hi = 0.0;
    if (opt.window) {
        std::tie(t_lo, t_hi) = *opt.window;
    } else {
        // Coarse single-exponential pre-fit from the peak down to 1% of it.
        const auto peak_it = std::max_element(trace.values.begin(), trace.values.end());
        if (peak_it == trace.values.end() || !(*peak_it > 0.0)) {
            throw DomainError("trace has no positive values");
        }
        const auto i0 = static_cast<std::size_t>(peak_it - trace.values.begin());
        std::vector<double> x, y, w;
        for (std::size_t i = i0; i < trace.size() && trace.values[i] > 0.01 * *peak_it; ++i) {
            x.push_back(trace.times[i]);
            y.push_back(std::log(trace.values[i]));
            w.push_back(1.0);
        }
        if (x.size() < 3) throw DomainError("trace too short for a coarse lifetime estimate");
        const auto coarse = detail::weighted_line(x, y, w);
        if (!(coarse.slope < 0.0)) throw DomainError("trace does not decay");
        const double tau_est = -1.0 / coarse.slope;
        t_lo = trace.times[i0] + 0.5 * tau_est;
        t_hi = trace.times[i0] + 3.0 * tau_est;
    }
    if (!(t_hi > t_lo)) throw DomainError("empty rate-extraction window");

    std::vector<double> x, y, w;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double t = trace.times[i];
        if (t < t_lo || t > t_hi) continue;
        const double v = trace.values[i];
        if (!(v > 0.0)) {
            if (opt.on_nonpositive == NonPositivePolicy::error) {
                throw DomainError("non-positive value inside rate-extraction window");
            }
            est.warnings.push_back("window shrunk at t = " + std::to_string(t) +
                                   " s due to a non-positive value");
            break;
        }
        x.push_back(t);
        y.push_back(std::log(v));
        w.push_back(use_value_weights ? v : 1.0);
    }
    if (x.size() < opt.min_samples) {
        throw DomainError("rate-extraction window holds " + std::to_string(x.size()) +
                          " positive samples, need " + std::to_string(opt.min_samples));
    }

    const auto line = detail::weighted_line(x, y, w);
    est.rate = -line.slope;
    est.std_error = line.slope_se;
    est.t_start = x.front();
    est.t_end = x.back();
    est.n_samples = x.size();

    const double mid = 0.5 * (x.front() + x.back());
    const double half = 0.5 * (x.back() - x.front());
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - mid) / half;
    est.curvature = std::abs(detail::weighted_quadratic_term(u, y, w));
    est.curvature_flag = est.curvature > opt.curvature_threshold;
    if (est.curvature_flag) {
        est.warnings.push_back("log-trace curvature " + std::to_string(est.curvature) +
                               " exceeds threshold; rate may be biased by background");
    }
    return est;
}

}  // namespace cqed::dynamics
