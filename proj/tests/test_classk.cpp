#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bblr/classk.hpp"
#include "support.hpp"

using namespace bblr;

TEST(ClassK, Evaluate) {
    EXPECT_DOUBLE_EQ(ClassKFn::linear(1.0)(2.0), 2.0);
    EXPECT_DOUBLE_EQ(ClassKFn::signed_power(3, 1.0)(-2.0), -8.0);
    for (const auto& fn : {ClassKFn::linear(3.0), ClassKFn::signed_power(2), ClassKFn::signed_power(5, 0.1)})
        EXPECT_EQ(fn(0.0), 0.0);
}

TEST(ClassK, SignedPowerIsOdd) {
    const auto sq = ClassKFn::signed_power(2, 1.0);
    EXPECT_DOUBLE_EQ(sq(-3.0), -9.0);
    EXPECT_DOUBLE_EQ(sq(3.0), 9.0);
}

TEST(ClassK, Add) {
    EXPECT_DOUBLE_EQ((ClassKFn::linear(1) + ClassKFn::linear(2))(1.0), 3.0);
    EXPECT_EQ((ClassKFn::linear(1) + ClassKFn::signed_power(3, 1))(0.0), 0.0);
    EXPECT_DOUBLE_EQ((ClassKFn::linear(1) + ClassKFn::signed_power(2, 1))(-1.0), -2.0);
}

TEST(ClassK, Scale) {
    EXPECT_DOUBLE_EQ(scale(ClassKFn::linear(1), 5.0)(1.0), 5.0);
    EXPECT_EQ(scale(ClassKFn::signed_power(3), 0.0)(3.0), 0.0);
    EXPECT_TRUE(scale(ClassKFn::signed_power(3), 0.0).degenerate());
    EXPECT_DOUBLE_EQ(scale(ClassKFn::signed_power(3, 1), 2.0)(0.5), 0.25);
    EXPECT_THROW(scale(ClassKFn::linear(1), -1.0), InvalidArgument);
}

TEST(ClassK, MakePssf) {
    const auto lin = make_pssf(ClassKFn::linear(1), 0.5);
    EXPECT_NEAR(lin(0.7), 0.7, 1e-15);
    EXPECT_EQ(lin(0.0), 0.0);
    const auto cube = make_pssf(ClassKFn::signed_power(3, 1), 0.5);
    EXPECT_NEAR(cube(0.5), 0.125, 1e-15);
    EXPECT_EQ(cube(0.0), 0.0);
    EXPECT_THROW(make_pssf(ClassKFn::linear(1), 0.0), InvalidArgument);
    EXPECT_THROW(make_pssf(ClassKFn::linear(1), -0.1), InvalidArgument);
}

TEST(ClassK, RhoCondition) {
    const auto lin1 = check_rho_condition(ClassKFn::linear(1), 0.5);
    EXPECT_TRUE(lin1.holds);
    EXPECT_EQ(lin1.h0, 0.0);

    EXPECT_TRUE(check_rho_condition(ClassKFn::linear(2), 0.5).holds);

    const auto cube = check_rho_condition(ClassKFn::signed_power(3, 1), 0.5);
    EXPECT_FALSE(cube.holds);
    // Independent oracle: gamma^{-1}(-0.5) = -cbrt(0.5)
    EXPECT_NEAR(cube.h0, -std::cbrt(0.5) + 0.5, 1e-8);
    EXPECT_NEAR(cube.h0, -0.29370, 1e-5);
}

TEST(ClassK, Inverse) {
    EXPECT_NEAR(inverse_at(ClassKFn::linear(2), 1.0), 0.5, 1e-9);
    EXPECT_EQ(inverse_at(ClassKFn::signed_power(4), 0.0), 0.0);
    const auto cube = ClassKFn::signed_power(3, 1);
    const double r = inverse_at(cube, -0.5);
    EXPECT_NEAR(r, -0.79370, 1e-5);
    EXPECT_NEAR(cube(r), -0.5, 1e-9);
    EXPECT_THROW(inverse_at(ClassKFn::zero(), 1.0), InvalidArgument);
}

TEST(ClassK, InverseNeedsLargeBracket) {
    const auto tiny = ClassKFn::linear(1e-6);
    EXPECT_NEAR(inverse_at(tiny, 1.0), 1e6, 1e-2);
}

TEST(ClassK, InverseIterationCapReported) {
    InversionOptions opts;
    opts.max_iterations = 3;
    opts.tolerance = 1e-15;
    EXPECT_THROW(inverse_at(ClassKFn::signed_power(3), 0.3, opts), ConvergenceError);
}

TEST(ClassK, DegenerateAndWellFormed) {
    EXPECT_TRUE(ClassKFn::zero().degenerate());
    EXPECT_FALSE(ClassKFn::zero().well_formed());
    EXPECT_TRUE((ClassKFn::zero() + ClassKFn::linear(1)).well_formed());
    EXPECT_THROW(ClassKFn::linear(-1.0), InvalidArgument);
    EXPECT_THROW(ClassKFn::signed_power(0), InvalidArgument);
}

using bblr::oracle::random_classk;

TEST(ClassKProperty, RandomCompositionsAnchoredAndIncreasing) {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 1000; ++trial) {
        const ClassKFn fn = random_classk(rng, 3);
        ASSERT_TRUE(fn.well_formed());
        ASSERT_LE(std::abs(fn(0.0)), 1e-12) << "trial " << trial;
        double prev = fn(-2.0);
        for (int i = 1; i < 100; ++i) {
            const double v = fn(-2.0 + 4.0 * i / 99.0);
            ASSERT_GT(v, prev) << "trial " << trial << " i " << i;
            prev = v;
        }
    }
}

TEST(ClassKProperty, InverseRoundTrip) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        const ClassKFn fn = random_classk(rng, 2);
        const double v = value(rng);
        ASSERT_NEAR(fn(inverse_at(fn, v)), v, 1e-9);
    }
}

TEST(ClassKProperty, RhoCheckMatchesDirectEvaluation) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> rho_dist(0.01, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const ClassKFn fn = random_classk(rng, 2);
        const double rho = rho_dist(rng);
        const bool direct = rho <= -fn(-rho);
        const RhoCheck rc = check_rho_condition(fn, rho);
        ASSERT_EQ(rc.holds, direct);
        if (!rc.holds) {
            // h0 = gamma^{-1}(-rho) + rho, so gamma(h0 - rho) = -rho.
            ASSERT_NEAR(fn(rc.h0 - rho), -rho, 1e-8);
            ASSERT_LT(rc.h0, 0.0);
        }
    }
}
