#include "qvi/penalty.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qvi;

TEST(Penalty, NegativeBranchIsOne)
{
    for (double eps : {0.5, 0.1, 1e-3}) {
        EXPECT_EQ(penalty_k(-1.0, eps), 1.0);
        EXPECT_EQ(penalty_k(0.0, eps), 1.0);
        EXPECT_EQ(penalty_k_prime(-1.0, eps), 0.0);
    }
}

TEST(Penalty, ExponentialBranch)
{
    const double eps = 0.1;
    EXPECT_NEAR(penalty_k(2 * eps, eps), std::exp(2.0), 1e-12);
    EXPECT_NEAR(penalty_k_prime(2 * eps, eps), std::exp(2.0) / eps, 1e-10);
}

TEST(Penalty, BlendIsBetweenEndpointLaws)
{
    const double eps = 0.05;
    const double mid = penalty_k(eps / 2, eps);
    EXPECT_GT(mid, 1.0);
    EXPECT_LT(mid, std::exp(0.5));
    const double h = 1e-7 * eps;
    EXPECT_GE(penalty_k(eps / 2 + h, eps) - penalty_k(eps / 2 - h, eps), 0.0);
}

TEST(Penalty, DerivativeMatchesFiniteDifference)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> s(-0.2, 0.5);
    const double eps = 0.1;
    for (int i = 0; i < 20; ++i) {
        const double x = s(rng);
        const double h = 1e-6;
        const double fd = (penalty_k(x + h, eps) - penalty_k(x - h, eps)) / (2 * h);
        const double exact = penalty_k_prime(x, eps);
        EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::fabs(exact))) << x;
    }
}

TEST(Penalty, Monotone)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> s(-1.0, 1.0);
    std::uniform_real_distribution<double> e(1e-3, 0.9);
    for (int i = 0; i < 1000; ++i) {
        double a = s(rng), b = s(rng);
        if (a > b) std::swap(a, b);
        const double eps = e(rng);
        EXPECT_LE(penalty_k(a, eps), penalty_k(b, eps));
        EXPECT_GE(penalty_k(a, eps), 1.0);
    }
}

TEST(Penalty, ContinuousAcrossSeams)
{
    const double eps = 0.1;
    const double d = 1e-12;
    for (double seam : {0.0, eps}) {
        EXPECT_LE(std::fabs(penalty_k(seam + d, eps) - penalty_k(seam - d, eps)), 1e-10);
        EXPECT_LE(std::fabs(penalty_k_prime(seam + d, eps) - penalty_k_prime(seam - d, eps)), 1e-10 / eps);
    }
}

TEST(Penalty, AntiderivativeExamples)
{
    EXPECT_EQ(penalty_K(-0.5, 0.1), -0.5);
    EXPECT_EQ(penalty_K(0.0, 0.1), 0.0);
    const double K = penalty_K(0.3, 0.1);
    EXPECT_GT(K, 0.3);
    EXPECT_LT(K, std::exp(3.0) * 0.3);
    const double h = 1e-5;
    const double fd = (penalty_K(0.3 + h, 0.1) - penalty_K(0.3 - h, 0.1)) / (2 * h);
    EXPECT_NEAR(fd, penalty_k(0.3, 0.1), 1e-6 * penalty_k(0.3, 0.1));
}

TEST(Penalty, AntiderivativeIsConvex)
{
    const double eps = 0.1;
    const double h = 1e-3;
    for (double s = -0.3; s <= 0.6; s += 0.005) {
        const double second = penalty_K(s + h, eps) - 2 * penalty_K(s, eps) + penalty_K(s - h, eps);
        EXPECT_GE(second, -1e-8) << s;
    }
}

TEST(Penalty, ClampAtExponentCap)
{
    EXPECT_FALSE(penalty_clamped(0.5, 0.1));
    EXPECT_TRUE(penalty_clamped(100.0, 0.1));
    EXPECT_TRUE(std::isfinite(penalty_k(100.0, 0.1)));
    EXPECT_TRUE(std::isfinite(penalty_k_prime(100.0, 0.1)));
}

TEST(Penalty, ParamsRange)
{
    EXPECT_NO_THROW((RegularizationParams{0.5, 0.5}.check()));
    EXPECT_THROW((RegularizationParams{1.0, 0.5}.check()), std::invalid_argument);
    EXPECT_THROW((RegularizationParams{0.5, 0.0}.check()), std::invalid_argument);
}

TEST(Penalty, SmoothingOffIsIdentity)
{
    const Grid g = Grid::line(0, 1, 9);
    FaceField in(g);
    for (std::size_t f = 0; f < in[0].size(); ++f) in[0][f] = 1.0 + 0.1 * f;
    const FaceField out = smooth_constraint(in, RegularizationParams{0.1, 0.1, 0}, 0.5);
    EXPECT_EQ(out[0], in[0]);
}

TEST(Penalty, SmoothingPreservesConstants)
{
    const Grid g = Grid::rectangle(0, 1, 0, 1, 7, 6);
    const FaceField in(g, 1.7);
    for (int width : {3, 5, 9}) {
        const FaceField out = smooth_constraint(in, RegularizationParams{0.1, 0.1, width}, 0.5);
        for (int a = 0; a < 2; ++a)
            for (double v : out[a]) EXPECT_NEAR(v, 1.7, 1e-14);
    }
}

TEST(Penalty, StepProfileWidthThree)
{
    const Grid g = Grid::line(0, 1, 9);  // 8 faces
    FaceField in(g);
    for (std::size_t f = 0; f < 8; ++f) in[0][f] = f < 4 ? 1.0 : 2.0;
    const FaceField out = smooth_constraint(in, RegularizationParams{0.1, 0.1, 3}, 0.5);
    // last face of the left half averages 1, 1, 2
    EXPECT_NEAR(out[0][3], 4.0 / 3.0, 1e-12);
    EXPECT_NEAR(out[0][4], 5.0 / 3.0, 1e-12);
}

TEST(Penalty, SmoothingRespectsFloor)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> v(0.3, 3.0);
    const Grid g = Grid::rectangle(0, 1, 0, 1, 8, 8);
    FaceField in(g);
    for (int a = 0; a < 2; ++a)
        for (auto& x : in[a]) x = v(rng);
    const FaceField out = smooth_constraint(in, RegularizationParams{0.1, 0.1, 5}, 0.8);
    for (int a = 0; a < 2; ++a)
        for (double x : out[a]) EXPECT_GE(x, 0.8);
}
