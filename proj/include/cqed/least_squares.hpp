#pragma once

// Weighted nonlinear least squares: damped Gauss-Newton with a
// Levenberg-Marquardt damping schedule (Nielsen's update) and box bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cqed/errors.hpp"
#include "cqed/fit_models.hpp"

namespace cqed::fitting {

struct FitOptions {
    std::size_t max_iterations = 500;
    double xtol = 1e-10;        // relative step (scaled norm)
    double gtol = 1e-12;        // max cosine between residual and Jacobian columns
    double fd_step = 1e-7;      // relative finite-difference step
    bool allow_singular = false;
    std::vector<bool> fixed;    // per parameter; empty = all free
    std::vector<double> typical_scale;  // FD step base for parameters at zero
};

struct FitResult {
    FitModel model = FitModel::tau_detuning();
    std::vector<double> params;
    std::vector<double> standard_errors;  // NaN where not identifiable or fixed
    Eigen::MatrixXd covariance;           // full size, zero rows/cols for fixed params
    std::vector<bool> identifiable;
    std::vector<bool> fixed;
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    double residual_norm = 0.0;
    std::size_t n_points = 0;
    std::size_t dof = 0;
    std::size_t n_iterations = 0;
    bool converged = false;
    std::string termination;
    std::vector<std::string> warnings;

    double param(const std::string& name) const { return params[model.index_of(name)]; }
    double error(const std::string& name) const { return standard_errors[model.index_of(name)]; }

    double correlation(std::size_t i, std::size_t j) const {
        const double d = std::sqrt(covariance(i, i) * covariance(j, j));
        return d > 0.0 ? covariance(i, j) / d : 0.0;
    }
};

namespace detail {

class Problem {
public:
    Problem(const FitModel& m, std::span<const double> x, std::span<const double> y,
            std::span<const double> sigma, std::vector<std::size_t> free, const FitOptions& opt)
        : m_(m), x_(x), y_(y), sigma_(sigma), free_(std::move(free)), opt_(opt) {}

    double weight(std::size_t i) const { return sigma_.empty() ? 1.0 : 1.0 / sigma_[i]; }

    Eigen::VectorXd residuals(std::span<const double> p) const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(x_.size()));
        for (std::size_t i = 0; i < x_.size(); ++i) {
            r(static_cast<Eigen::Index>(i)) = (y_[i] - m_.eval(x_[i], p)) * weight(i);
        }
        return r;
    }

    // d residual / d free params.
    Eigen::MatrixXd jacobian(std::span<const double> p) const {
        const auto n = static_cast<Eigen::Index>(x_.size());
        const auto k = static_cast<Eigen::Index>(free_.size());
        Eigen::MatrixXd j(n, k);
        if (m_.has_analytic_gradient()) {
            std::vector<double> g(m_.size());
            for (Eigen::Index i = 0; i < n; ++i) {
                m_.gradient(x_[static_cast<std::size_t>(i)], p, g);
                for (Eigen::Index c = 0; c < k; ++c) {
                    j(i, c) = -g[free_[static_cast<std::size_t>(c)]] * weight(static_cast<std::size_t>(i));
                }
            }
            return j;
        }
        std::vector<double> pp(p.begin(), p.end()), pm(p.begin(), p.end());
        for (Eigen::Index c = 0; c < k; ++c) {
            const std::size_t q = free_[static_cast<std::size_t>(c)];
            double base = std::abs(p[q]);
            if (base == 0.0) base = q < opt_.typical_scale.size() ? opt_.typical_scale[q] : 1.0;
            const double h = opt_.fd_step * base;
            pp[q] = p[q] + h;
            pm[q] = p[q] - h;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double xi = x_[static_cast<std::size_t>(i)];
                j(i, c) = -(m_.eval(xi, pp) - m_.eval(xi, pm)) / (2.0 * h) * weight(static_cast<std::size_t>(i));
            }
            pp[q] = p[q];
            pm[q] = p[q];
        }
        return j;
    }

private:
    const FitModel& m_;
    std::span<const double> x_, y_, sigma_;
    std::vector<std::size_t> free_;
    const FitOptions& opt_;
};

}  // namespace detail

/// Minimizes sum(((y - model(x; p)) / sigma)^2).
///
/// Converges when the scaled step ||D dp|| <= xtol ||D p||, when the largest
/// cosine between the residual vector and a Jacobian column drops below gtol,
/// or when the residual vanishes to rounding. Hitting the iteration cap
/// returns a result with `converged == false`.
///
/// Covariance is (J^T J)^-1 scaled by the reduced chi-square. A singular
/// normal matrix at the optimum throws DegenerateFitError unless
/// `allow_singular` is set, in which case a pseudo-inverse is used and the
/// parameters spanning the null space are marked not identifiable.
inline FitResult least_squares_fit(const FitModel& model, std::span<const double> x,
                                   std::span<const double> y, std::span<const double> sigma,
                                   std::optional<std::vector<double>> init, const FitOptions& opt = {}) {
    if (x.size() != y.size()) throw DomainError("x and y lengths differ");
    if (!sigma.empty() && sigma.size() != y.size()) throw DomainError("sigma length differs from y");
    for (double s : sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("sigma must be positive and finite");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DomainError("data must be finite");
    }

    const std::size_t np = model.size();
    std::vector<double> p = init ? *init : model.initial_guess(x, y);
    if (p.size() != np) throw DomainError("initial parameter vector has the wrong length");
    for (std::size_t i = 0; i < np; ++i) {
        const auto& b = model.bounds()[i];
        if (!b.contains(p[i])) {
            // Nudge a boundary-violating start inside.
            if (p[i] <= b.lo) p[i] = b.open_lo ? (b.lo == 0.0 ? 1e-300 : b.lo + std::abs(b.lo) * 1e-12) : b.lo;
            if (p[i] >= b.hi) p[i] = b.open_hi ? b.hi - std::abs(b.hi) * 1e-12 : b.hi;
        }
    }

    std::vector<bool> fixed = opt.fixed.empty() ? std::vector<bool>(np, false) : opt.fixed;
    if (fixed.size() != np) throw DomainError("fixed mask has the wrong length");
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < np; ++i)
        if (!fixed[i]) free.push_back(i);
    if (x.size() < free.size()) {
        throw DomainError("need at least as many points as free parameters");
    }

    detail::Problem prob(model, x, y, sigma, free, opt);
    const auto k = static_cast<Eigen::Index>(free.size());

    double data_scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double v = y[i] * prob.weight(i);
        data_scale += v * v;
    }

    Eigen::VectorXd r = prob.residuals(p);
    double cost = r.squaredNorm();
    Eigen::MatrixXd jac = prob.jacobian(p);
    Eigen::MatrixXd a = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * r;
    Eigen::VectorXd diag = a.diagonal();

    FitResult res;
    res.model = model;
    double mu = 1e-3;  // dimensionless: the damping term is mu * diag(J^T J)
    double nu = 2.0;
    std::size_t iter = 0;
    bool converged = false;
    std::string why = "iteration limit";

    auto scaled_norm = [&](const Eigen::VectorXd& v) { return std::sqrt((diag.array() * v.array().square()).sum()); };

    while (iter < opt.max_iterations) {
        if (cost <= 1e-28 * data_scale) {
            converged = true;
            why = "zero residual";
            break;
        }
        {
            double cmax = 0.0;
            const double rn = std::sqrt(cost);
            for (Eigen::Index c = 0; c < k; ++c) {
                const double jn = std::sqrt(a(c, c));
                if (jn > 0.0) cmax = std::max(cmax, std::abs(g(c)) / (jn * rn));
            }
            if (cmax <= opt.gtol) {
                converged = true;
                why = "gradient";
                break;
            }
        }
        ++iter;

        // Parameters with an all-zero Jacobian column are held for this step.
        std::vector<Eigen::Index> active;
        for (Eigen::Index c = 0; c < k; ++c)
            if (a(c, c) > 0.0) active.push_back(c);
        if (active.empty()) {
            converged = true;
            why = "no sensitivity";
            break;
        }
        const auto ka = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd aa(ka, ka);
        Eigen::VectorXd ga(ka);
        for (Eigen::Index i = 0; i < ka; ++i) {
            ga(i) = g(active[i]);
            for (Eigen::Index j = 0; j < ka; ++j) aa(i, j) = a(active[i], active[j]);
            aa(i, i) += mu * diag(active[i]);
        }
        const Eigen::VectorXd da = aa.ldlt().solve(-ga);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < ka; ++i) step(active[i]) = da(i);

        std::vector<double> trial = p;
        Eigen::VectorXd actual(k);
        Eigen::VectorXd pfree(k);
        for (Eigen::Index c = 0; c < k; ++c) {
            const std::size_t q = free[static_cast<std::size_t>(c)];
            trial[q] = model.bounds()[q].project(p[q] + step(c), p[q]);
            actual(c) = trial[q] - p[q];
            pfree(c) = p[q];
        }
        const Eigen::VectorXd r_trial = prob.residuals(trial);
        const double cost_trial = r_trial.squaredNorm();
        const double predicted = -(2.0 * g.dot(actual) + actual.dot(a * actual));
        const double rho = predicted > 0.0 ? (cost - cost_trial) / predicted : -1.0;
        const bool small_step = scaled_norm(actual) <= opt.xtol * scaled_norm(pfree);

        if (std::isfinite(cost_trial) && cost_trial < cost && rho > 0.0) {
            p = std::move(trial);
            r = r_trial;
            cost = cost_trial;
            jac = prob.jacobian(p);
            a = jac.transpose() * jac;
            g = jac.transpose() * r;
            diag = diag.cwiseMax(a.diagonal());
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
            if (small_step) {
                converged = true;
                why = "relative step";
                break;
            }
        } else {
            if (small_step) {
                converged = true;
                why = "relative step";
                break;
            }
            mu *= nu;
            nu *= 2.0;
        }
    }

    res.params = p;
    res.fixed = fixed;
    res.n_iterations = iter;
    res.converged = converged;
    res.termination = why;
    res.chi2 = cost;
    res.residual_norm = std::sqrt(cost);
    res.n_points = x.size();
    res.dof = x.size() - free.size();
    res.reduced_chi2 = res.dof > 0 ? cost / static_cast<double>(res.dof)
                                   : std::numeric_limits<double>::quiet_NaN();
    if (!converged) res.warnings.push_back("iteration limit reached without convergence");

    // Covariance from the final Jacobian.
    res.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
    res.standard_errors.assign(np, std::numeric_limits<double>::quiet_NaN());
    res.identifiable.assign(np, false);
    if (k == 0) return res;

    Eigen::VectorXd dscale(k);
    for (Eigen::Index c = 0; c < k; ++c) dscale(c) = a(c, c) > 0.0 ? 1.0 / std::sqrt(a(c, c)) : 0.0;
    const Eigen::MatrixXd s = dscale.asDiagonal() * a * dscale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const Eigen::VectorXd ev = es.eigenvalues();
    const Eigen::MatrixXd evec = es.eigenvectors();
    constexpr double rcond = 1e-12;
    const double evmax = std::max(ev.maxCoeff(), 0.0);

    std::vector<bool> ident(static_cast<std::size_t>(k), true);
    bool singular = false;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (dscale(c) == 0.0) {
            ident[static_cast<std::size_t>(c)] = false;
            singular = true;
        }
    }
    Eigen::MatrixXd sinv = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index e = 0; e < k; ++e) {
        if (ev(e) > rcond * evmax && evmax > 0.0) {
            sinv += evec.col(e) * evec.col(e).transpose() / ev(e);
        } else {
            singular = true;
            for (Eigen::Index c = 0; c < k; ++c)
                if (std::abs(evec(c, e)) > 0.1) ident[static_cast<std::size_t>(c)] = false;
        }
    }
    if (singular && !opt.allow_singular) {
        throw DegenerateFitError("normal matrix is singular at the optimum; parameters are not identifiable");
    }
    if (singular) res.warnings.push_back("singular normal matrix; some parameters are not identifiable");

    const double scale = std::isfinite(res.reduced_chi2) ? res.reduced_chi2 : 0.0;
    const Eigen::MatrixXd cov = scale * (dscale.asDiagonal() * sinv * dscale.asDiagonal());
    for (Eigen::Index i = 0; i < k; ++i) {
        const std::size_t qi = free[static_cast<std::size_t>(i)];
        res.identifiable[qi] = ident[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < k; ++j) {
            res.covariance(static_cast<Eigen::Index>(qi),
                           static_cast<Eigen::Index>(free[static_cast<std::size_t>(j)])) = cov(i, j);
        }
        if (res.identifiable[qi]) res.standard_errors[qi] = std::sqrt(std::max(cov(i, i), 0.0));
    }
    return res;
}

inline FitResult least_squares_fit(const FitModel& model, std::span<const double> x, std::span<const double> y,
                                   const FitOptions& opt = {}) {
    return least_squares_fit(model, x, y, {}, std::nullopt, opt);
}

}  // namespace cqed::fitting
