#include "bmtf/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace bmtf {
namespace {

struct Moments {
    double mean = 0.0, var = 0.0;
};

template <typename Draw>
Moments sample_moments(int n, Draw draw) {
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = draw();
        s += x;
        ss += x * x;
    }
    const double m = s / n;
    return {m, ss / n - m * m};
}

TEST(RngStream, SameSeedAndStreamRepeat) {
    RngStream a(5, 3), b(5, 3), c(5, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        differs |= x != c.normal();
    }
    EXPECT_TRUE(differs);
}

TEST(RngStream, UniformStaysInsideOpenInterval) {
    RngStream r(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(RngStream, NormalMoments) {
    RngStream r(2);
    const int n = 200000;
    const auto m = sample_moments(n, [&] { return r.normal(); });
    EXPECT_NEAR(m.mean, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(m.var, 1.0, 5.0 * std::sqrt(2.0 / n));
}

class GammaMoments : public ::testing::TestWithParam<std::pair<double, double>> {};

TEST_P(GammaMoments, MatchShapeOverRate) {
    const auto [shape, rate] = GetParam();
    RngStream r(11);
    const int n = 200000;
    const auto m = sample_moments(n, [&] { return draw_gamma(shape, rate, r); });
    const double mean = shape / rate, var = shape / (rate * rate);
    EXPECT_NEAR(m.mean, mean, 5.0 * std::sqrt(var / n));
    // Var of the sample variance of a Gamma: (mu4 - var^2) / n, mu4 = 3 var^2 (1 + 2/shape).
    const double mu4 = 3.0 * var * var * (1.0 + 2.0 / shape);
    EXPECT_NEAR(m.var, var, 5.0 * std::sqrt((mu4 - var * var) / n));
}

INSTANTIATE_TEST_SUITE_P(Shapes, GammaMoments,
                         ::testing::Values(std::pair{0.5, 1.0}, std::pair{3.0, 2.0}, std::pair{1.0, 0.25},
                                           std::pair{20.0, 5.0}));

TEST(DrawGamma, TinyShapeStaysPositive) {
    RngStream r(3);
    for (int i = 0; i < 10000; ++i) ASSERT_GE(draw_gamma(1e-3, 1e-3, r), std::numeric_limits<double>::min());
}

TEST(DrawBeta, Mean) {
    RngStream r(4);
    const int n = 100000;
    const auto m = sample_moments(n, [&] { return draw_beta(2.0, 5.0, r); });
    const double mean = 2.0 / 7.0, var = 2.0 * 5.0 / (49.0 * 8.0);
    EXPECT_NEAR(m.mean, mean, 5.0 * std::sqrt(var / n));
}

TEST(DrawBernoulli, FrequencyIsLogistic) {
    RngStream r(5);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += draw_bernoulli_logodds(0.7, r);
    const double p = 1.0 / (1.0 + std::exp(-0.7));
    EXPECT_NEAR(ones / static_cast<double>(n), p, 5.0 * std::sqrt(p * (1 - p) / n));
    EXPECT_EQ(draw_bernoulli_logodds(std::numeric_limits<double>::infinity(), r), 1);
    EXPECT_EQ(draw_bernoulli_logodds(-std::numeric_limits<double>::infinity(), r), 0);
}

TEST(Log1pExp, AgreesWithDirectFormulaAndAsymptotes) {
    for (double x : {-30.0, -2.0, 0.0, 1.5, 20.0}) EXPECT_NEAR(log1p_exp(x), std::log1p(std::exp(x)), 1e-12);
    EXPECT_DOUBLE_EQ(log1p_exp(800.0), 800.0);
    EXPECT_GE(log1p_exp(-800.0), 0.0);
}

TEST(GaussianPrecision, DrawCovarianceIsInversePrecision) {
    Matrix p(3, 3);
    p << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
    const Vector h = Vector::Ones(3);
    const Matrix cov = p.inverse();
    const Vector mean = cov * h;
    GaussianPrecision g(p);
    EXPECT_TRUE(g.covariance().isApprox(cov, 1e-12));
    EXPECT_TRUE(g.mean(h).isApprox(mean, 1e-12));

    RngStream r(6);
    const int n = 100000;
    Vector s = Vector::Zero(3);
    Matrix ss = Matrix::Zero(3, 3);
    for (int i = 0; i < n; ++i) {
        const Vector x = g.draw(h, r);
        s += x;
        ss += x * x.transpose();
    }
    const Vector m = s / n;
    const Matrix c = ss / n - m * m.transpose();
    for (Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(m[i], mean[i], 5.0 * std::sqrt(cov(i, i) / n));
        for (Index j = 0; j < 3; ++j) EXPECT_NEAR(c(i, j), cov(i, j), 0.02);
    }
}

TEST(GaussianPrecision, NotPositiveDefiniteThrowsWithPivot) {
    Matrix p(2, 2);
    p << 1, 2, 2, 1;
    try {
        GaussianPrecision g(p);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_EQ(e.leading_minor(), 1);
    }
}

}  // namespace
}  // namespace bmtf
