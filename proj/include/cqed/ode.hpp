#pragma once

// Explicit Runge-Kutta integrators for small dense linear systems.
//
// `State` is any Eigen column vector (real or complex). The right-hand side
// is called as `rhs(t, y, dydt)` and must write into `dydt`.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "cqed/errors.hpp"

namespace cqed::ode {

struct AdaptiveOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double initial_step = 0.0;  // 0 selects automatically
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 20'000'000;
};

struct Statistics {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_calls = 0;
};

namespace detail {

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, double rtol, double atol) {
    const auto n = err.size();
    double acc = 0.0;
    for (decltype(err.size()) i = 0; i < n; ++i) {
        const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = std::abs(err[i]) / scale;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

template <class State>
double max_abs(const State& y) {
    double m = 0.0;
    for (decltype(y.size()) i = 0; i < y.size(); ++i) m = std::max(m, static_cast<double>(std::abs(y[i])));
    return m;
}

}  // namespace detail

/// Dormand-Prince 5(4) with a PI step-size controller. The solution is
/// reported at every time in `t_out` (which must start at the initial time
/// and be strictly increasing); steps are clipped to land on them exactly.
///
/// Throws IntegrationError carrying the last accepted time if the step
/// budget runs out or the step size underflows.
template <class State, class Rhs, class Observer>
Statistics integrate_dopri5(Rhs&& rhs, State y, std::span<const double> t_out,
                            const AdaptiveOptions& opt, Observer&& observe) {
    Statistics stats;
    if (t_out.empty()) return stats;

    // Butcher tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double rtol = opt.rel_tol;
    const double atol = opt.abs_tol;

    double t = t_out.front();
    observe(t, y);
    if (t_out.size() == 1) return stats;

    State k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()),
        k7(y.size()), ytmp(y.size()), ynew(y.size()), err(y.size());

    rhs(t, y, k1);
    ++stats.rhs_calls;

    double h = opt.initial_step;
    if (!(h > 0.0)) {
        // Hairer & Wanner II.4 starting step heuristic.
        const double d0 = detail::max_abs(y);
        const double d1 = detail::max_abs(k1);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t_out.back() - t);
        ytmp = y + h0 * k1;
        rhs(t + h0, ytmp, k2);
        ++stats.rhs_calls;
        const double d2 = detail::max_abs(State(k2 - k1)) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
        h = std::min(100.0 * h0, h1);
    }
    h = std::min(h, opt.max_step);

    double err_prev = 1e-4;
    bool last_rejected = false;

    for (std::size_t k = 1; k < t_out.size(); ++k) {
        const double t_target = t_out[k];
        while (t < t_target) {
            if (stats.accepted + stats.rejected >= opt.max_steps) {
                throw IntegrationError("step budget exhausted before reaching t = " +
                                           std::to_string(t_target),
                                       t);
            }
            const bool clipped = t + h >= t_target;
            const double step = clipped ? t_target - t : h;
            if (step <= std::abs(t) * 4.0 * std::numeric_limits<double>::epsilon()) {
                throw IntegrationError("step size underflow", t);
            }

            ytmp = y + step * (a21 * k1);
            rhs(t + c2 * step, ytmp, k2);
            ytmp = y + step * (a31 * k1 + a32 * k2);
            rhs(t + c3 * step, ytmp, k3);
            ytmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs(t + c4 * step, ytmp, k4);
            ytmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs(t + c5 * step, ytmp, k5);
            ytmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs(t + step, ytmp, k6);
            ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs(t + step, ynew, k7);
            stats.rhs_calls += 6;
            err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double en = detail::error_norm(err, y, ynew, rtol, atol);
            if (!std::isfinite(en)) {
                throw IntegrationError("non-finite state during integration", t);
            }

            if (en <= 1.0) {
                // PI controller (beta = 0.04, alpha = 0.2 - 0.75 beta).
                double fac = en == 0.0 ? 10.0
                                       : 0.9 * std::pow(en, -0.17) * std::pow(err_prev, 0.04);
                fac = std::clamp(fac, 0.2, 10.0);
                if (last_rejected) fac = std::min(fac, 1.0);
                err_prev = std::max(en, 1e-4);
                t = clipped ? t_target : t + step;
                y.swap(ynew);
                k1.swap(k7);
                ++stats.accepted;
                last_rejected = false;
                // A clipped step says nothing about the natural step size.
                if (!clipped || step >= h) h = std::min(step * fac, opt.max_step);
            } else {
                const double fac = std::max(0.2, 0.9 * std::pow(en, -0.2));
                h = step * fac;
                ++stats.rejected;
                last_rejected = true;
            }
        }
        observe(t, y);
    }
    return stats;
}

/// Classical RK4 at a fixed step `dt` (shortened to land on output times).
template <class State, class Rhs, class Observer>
Statistics integrate_rk4_fixed(Rhs&& rhs, State y, std::span<const double> t_out, double dt,
                               Observer&& observe) {
    Statistics stats;
    if (t_out.empty()) return stats;
    if (!(dt > 0.0)) throw DomainError("fixed step must be positive");

    State k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), ytmp(y.size());
    double t = t_out.front();
    observe(t, y);
    for (std::size_t k = 1; k < t_out.size(); ++k) {
        const double t_target = t_out[k];
        while (t < t_target) {
            const double step = std::min(dt, t_target - t);
            rhs(t, y, k1);
            ytmp = y + (0.5 * step) * k1;
            rhs(t + 0.5 * step, ytmp, k2);
            ytmp = y + (0.5 * step) * k2;
            rhs(t + 0.5 * step, ytmp, k3);
            ytmp = y + step * k3;
            rhs(t + step, ytmp, k4);
            y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            stats.rhs_calls += 4;
            ++stats.accepted;
            t = (t + step >= t_target) ? t_target : t + step;
            if (!std::isfinite(detail::max_abs(y))) {
                throw IntegrationError("fixed-step integration diverged", t);
            }
        }
        observe(t, y);
    }
    return stats;
}

}  // namespace cqed::ode
