#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cqed/ode.hpp"

using namespace cqed;

namespace {
std::vector<double> grid(double t_end, int n) {
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) t[i] = t_end * i / n;
    return t;
}
}  // namespace

TEST(Dopri5, ExponentialDecay) {
    const auto t = grid(5.0, 50);
    Eigen::VectorXd y0(1);
    y0 << 1.0;
    double max_err = 0.0;
    ode::AdaptiveOptions opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-12;
    ode::integrate_dopri5([](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; }, y0, t, opt,
                          [&](double ti, const Eigen::VectorXd& y) {
                              max_err = std::max(max_err, std::abs(y(0) - std::exp(-ti)));
                          });
    EXPECT_LT(max_err, 1e-9);
}

TEST(Dopri5, HarmonicOscillatorComplex) {
    const auto t = grid(10.0, 100);
    Eigen::VectorXcd y0(1);
    y0 << 1.0;
    const std::complex<double> i1(0.0, 1.0);
    double max_err = 0.0;
    ode::AdaptiveOptions opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-12;
    ode::integrate_dopri5([&](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) { dy = -i1 * y; }, y0, t,
                          opt, [&](double ti, const Eigen::VectorXcd& y) {
                              max_err = std::max(max_err, std::abs(y(0) - std::exp(-i1 * ti)));
                          });
    EXPECT_LT(max_err, 1e-8);
}

TEST(Dopri5, LandsExactlyOnOutputTimes) {
    const std::vector<double> t{0.0, 0.1, 0.35, 2.0};
    Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
    std::vector<double> seen;
    ode::integrate_dopri5([](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; }, y0, t,
                          ode::AdaptiveOptions{}, [&](double ti, const Eigen::VectorXd&) { seen.push_back(ti); });
    EXPECT_EQ(seen, t);
}

TEST(Dopri5, TighterToleranceReducesError) {
    const auto t = grid(3.0, 3);
    auto err_at = [&](double tol) {
        Eigen::VectorXd y0(2);
        y0 << 1.0, 0.0;
        double e = 0.0;
        ode::AdaptiveOptions opt;
        opt.rel_tol = tol;
        opt.abs_tol = tol * 1e-2;
        ode::integrate_dopri5(
            [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
                dy(0) = y(1);
                dy(1) = -y(0);
            },
            y0, t, opt, [&](double ti, const Eigen::VectorXd& y) { e = std::max(e, std::abs(y(0) - std::cos(ti))); });
        return e;
    };
    EXPECT_LT(err_at(1e-10), err_at(1e-5));
}

TEST(Dopri5, StepBudgetExhaustionReportsLastTime) {
    const auto t = grid(100.0, 2);
    Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
    ode::AdaptiveOptions opt;
    opt.max_steps = 5;
    try {
        ode::integrate_dopri5([](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -1e3 * y; }, y0, t,
                              opt, [](double, const Eigen::VectorXd&) {});
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_GE(e.last_good_time(), 0.0);
        EXPECT_LT(e.last_good_time(), 100.0);
    }
}

TEST(Rk4Fixed, MatchesExponential) {
    const auto t = grid(2.0, 20);
    Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
    double max_err = 0.0;
    const auto stats = ode::integrate_rk4_fixed(
        [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; }, y0, t, 1e-3,
        [&](double ti, const Eigen::VectorXd& y) { max_err = std::max(max_err, std::abs(y(0) - std::exp(-ti))); });
    EXPECT_LT(max_err, 1e-12);
    EXPECT_GE(stats.accepted, 2000u);
}

TEST(Rk4Fixed, RejectsNonPositiveStep) {
    const auto t = grid(1.0, 2);
    Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
    EXPECT_THROW(ode::integrate_rk4_fixed([](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y; }, y0,
                                          t, 0.0, [](double, const Eigen::VectorXd&) {}),
                 DomainError);
}
