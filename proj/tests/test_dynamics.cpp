#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "bblr/dynamics.hpp"

using namespace bblr;
using std::numbers::pi;

namespace {

Vec v2(double a, double b) {
    Vec x(2);
    x << a, b;
    return x;
}

}  // namespace

TEST(Pendulum, TrueAndNominalParameters) {
    const auto truth = pendulum_system(1.0, 1.0, 9.81);
    const auto nominal = pendulum_system(1.0, 0.96, 9.81);
    EXPECT_EQ(truth.f(v2(0, 0)), v2(0, 0));
    EXPECT_NEAR(nominal.g(v2(0, 0))(1, 0), 1.0 / 0.96, 1e-15);
    EXPECT_NEAR(nominal.g(v2(0, 0))(1, 0), 1.04167, 1e-5);
    EXPECT_EQ(nominal.g(v2(0, 0))(0, 0), 0.0);

    const Vec f = truth.f(v2(pi / 2, 0));
    EXPECT_EQ(f(0), 0.0);
    EXPECT_DOUBLE_EQ(f(1), -9.81);
}

TEST(Pendulum, RejectsBadParameters) {
    EXPECT_THROW(pendulum_system(0.0, 1.0, 9.81), InvalidArgument);
    EXPECT_THROW(pendulum_system(1.0, -1.0, 9.81), InvalidArgument);
}

TEST(Barrier, Values) {
    const auto bf = ellipsoid_barrier(pi, 5.0);
    EXPECT_EQ(bf(v2(0, 0)), 1.0);
    EXPECT_NEAR(bf(v2(pi, 0)), 0.0, 1e-15);
    EXPECT_NEAR(bf(v2(pi / 2, 2.5)), 0.5, 1e-15);
    EXPECT_TRUE(bf.in_safe_set(v2(1, 1)));
    EXPECT_FALSE(bf.in_safe_set(v2(3.2, 0)));
    EXPECT_EQ(bf.h_max, 1.0);
}

TEST(Barrier, GradientMatchesFiniteDifference) {
    const auto bf = ellipsoid_barrier(pi, 5.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> th(-3.0, 3.0), om(-5.0, 5.0);
    for (int i = 0; i < 50; ++i) {
        const Vec x = v2(th(rng), om(rng));
        const Vec g = bf.grad(x);
        for (int k = 0; k < 2; ++k) {
            Vec e = Vec::Zero(2);
            e(k) = 1e-6;
            const double fd = (bf(x + e) - bf(x - e)) / 2e-6;
            EXPECT_NEAR(g(k), fd, 1e-7);
        }
    }
}

TEST(Lie, UpperEquilibrium) {
    const auto truth = pendulum_system(1.0, 1.0, 9.81);
    const auto bf = ellipsoid_barrier(pi, 5.0);
    const auto lie = lie_derivatives(truth, bf, v2(pi, 0));
    EXPECT_NEAR(lie.lf, 0.0, 1e-14);
    EXPECT_EQ(lie.lg(0), 0.0);
}

TEST(Lie, QuarterTurn) {
    const auto truth = pendulum_system(1.0, 1.0, 9.81);
    const auto bf = ellipsoid_barrier(pi, 5.0);
    const auto lie = lie_derivatives(truth, bf, v2(pi / 2, 1.0));
    // grad h = (-1/pi, -2/25), f = (1, -9.81)
    EXPECT_NEAR(lie.lf, -1.0 / pi + 0.08 * 9.81, 1e-14);
    EXPECT_NEAR(lie.lf, 0.46649, 1e-5);
    EXPECT_NEAR(lie.lg(0), -0.08, 1e-15);
}

TEST(Lie, ZeroGradient) {
    const auto truth = pendulum_system(1.0, 1.0, 9.81);
    const auto bf = ellipsoid_barrier(pi, 5.0);
    const auto lie = lie_derivatives(truth, bf, v2(0, 0));
    EXPECT_EQ(lie.lf, 0.0);
    EXPECT_EQ(lie.lg(0), 0.0);
}

TEST(Lie, AlongMatchesGradientDotRhs) {
    const auto truth = pendulum_system(1.0, 1.0, 9.81);
    const auto bf = ellipsoid_barrier(pi, 5.0);
    const Vec x = v2(1.3, -2.2);
    const Vec u = Vec::Constant(1, 4.0);
    EXPECT_NEAR(lie_derivatives(truth, bf, x).along(u), bf.grad(x).dot(truth.rhs(x, u)), 1e-13);
}

TEST(Lie, OutsideDomainRejected) {
    const auto truth = pendulum_system(1.0, 1.0, 9.81);
    const auto bf = ellipsoid_barrier(pi, 5.0);
    EXPECT_NO_THROW(lie_derivatives(truth, bf, v2(1.05 * pi, 0)));
    EXPECT_THROW(lie_derivatives(truth, bf, v2(1.2 * pi, 0)), DomainError);
    EXPECT_THROW(lie_derivatives(truth, bf, v2(0, 6.0)), DomainError);
}

TEST(Barrier, GridEstimateOfMaximum) {
    const auto bf = ellipsoid_barrier(pi, 5.0);
    EXPECT_NEAR(estimate_h_max(bf.value, bf.domain), 1.0, 1e-12);
    // Shifted bump whose maximum is off the grid centre.
    auto bump = [](const Vec& x) { return 0.7 - (x(0) - 0.5) * (x(0) - 0.5) - x(1) * x(1); };
    EXPECT_NEAR(estimate_h_max(bump, bf.domain, 401), 0.7, 1e-3);
}
