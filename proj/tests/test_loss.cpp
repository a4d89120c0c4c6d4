#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "coprior/loss.hpp"
#include "test_support.hpp"

using namespace coprior;
using coprior::testing::close_rel;

namespace {

double logit_of(double p) { return std::log(p / (1.0 - p)); }

Matrix one(double z) { return Matrix::Constant(1, 1, z); }
IntMatrix lab(int y) { return IntMatrix::Constant(1, 1, y); }

RaslParams with_alpha(double a) {
    RaslParams p;
    p.alphas = Vector::Constant(1, a);
    return p;
}

}  // namespace

TEST(RaslLoss, PositiveAtHalfProbability) {
    // 2 * 0.5 * ln 2
    EXPECT_NEAR(rasl_loss(one(0.0), lab(1), with_alpha(2.0)).total, std::log(2.0), 1e-12);
}

TEST(RaslLoss, NegativeBelowMarginIsZero) {
    RaslParams p;
    for (double prob : {0.001, 0.03, 0.05}) {
        const double z = logit_of(prob) - 1e-12;
        EXPECT_EQ(rasl_loss(one(z), lab(0), p).total, 0.0);
        EXPECT_EQ(rasl_grad(one(z), lab(0), p)(0, 0), 0.0);
    }
}

TEST(RaslLoss, NegativeAboveMarginHandValue) {
    RaslParams p;
    // p = 0.55, q = 0.5, loss = -0.5^3 ln 0.5
    EXPECT_NEAR(rasl_loss(one(logit_of(0.55)), lab(0), p).total, -0.125 * std::log(0.5), 1e-12);
}

TEST(RaslLoss, ReducesToBinaryCrossEntropy) {
    RaslParams p;
    p.gamma_pos = 0.0;
    p.gamma_neg = 0.0;
    p.delta = 0.0;
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int t = 0; t < 500; ++t) {
        const double z = u(gen);
        const int y = static_cast<int>(gen() % 2);
        EXPECT_NEAR(rasl_loss(one(z), lab(y), p).total, coprior::testing::bce(z, y), 1e-9);
    }
}

TEST(RaslGrad, PlainCrossEntropyGradient) {
    RaslParams p;
    p.gamma_pos = 0.0;
    const double z = 0.7;
    const double prob = 1.0 / (1.0 + std::exp(-z));
    EXPECT_NEAR(rasl_grad(one(z), lab(1), p)(0, 0), prob - 1.0, 1e-12);
    p.gamma_neg = 0.0;
    p.delta = 0.0;
    EXPECT_NEAR(rasl_grad(one(z), lab(0), p)(0, 0), prob, 1e-12);
}

TEST(RaslLoss, NonNegativeAndMonotone) {
    RaslParams p;
    double prev_pos = std::numeric_limits<double>::infinity(), prev_neg = 0.0;
    for (double z = -20.0; z <= 20.0; z += 0.05) {
        const double lp = rasl_loss(one(z), lab(1), p).total;
        const double ln = rasl_loss(one(z), lab(0), p).total;
        ASSERT_GE(lp, 0.0);
        ASSERT_GE(ln, 0.0);
        ASSERT_LE(lp, prev_pos);
        ASSERT_GE(ln, prev_neg);
        ASSERT_LE(rasl_grad(one(z), lab(1), p)(0, 0), 0.0);
        ASSERT_GE(rasl_grad(one(z), lab(0), p)(0, 0), 0.0);
        prev_pos = lp;
        prev_neg = ln;
    }
}

TEST(RaslLoss, AlphaScalesLinearly) {
    std::mt19937_64 gen(2);
    const Matrix z = coprior::testing::random_matrix(gen, 6, 4, -4.0, 4.0);
    IntMatrix y(6, 4);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = static_cast<std::int64_t>(gen() % 2);
    RaslParams base;
    RaslParams scaled;
    scaled.alphas = Vector::Constant(4, 3.5);
    EXPECT_NEAR(rasl_loss(z, y, scaled).total, 3.5 * rasl_loss(z, y, base).total, 1e-12);
    EXPECT_TRUE(rasl_grad(z, y, scaled).isApprox(3.5 * rasl_grad(z, y, base), 1e-14));
    scaled.alphas << 1, 2, 3, 4;
    const auto per = rasl_loss(z, y, scaled).per_element;
    const auto per_base = rasl_loss(z, y, base).per_element;
    for (Eigen::Index j = 0; j < 4; ++j)
        EXPECT_TRUE(per.col(j).isApprox(static_cast<double>(j + 1) * per_base.col(j), 1e-14));
}

TEST(RaslLoss, ExtremeLogitsStayFinite) {
    RaslParams p;
    for (double z : {-800.0, -40.0, 40.0, 800.0}) {
        for (int y : {0, 1}) {
            EXPECT_TRUE(std::isfinite(rasl_loss(one(z), lab(y), p).total));
            EXPECT_TRUE(std::isfinite(rasl_grad(one(z), lab(y), p)(0, 0)));
        }
    }
    // log clamp: -ln(1e-8) at most
    EXPECT_LE(rasl_loss(one(-800.0), lab(1), p).total, -std::log(1e-8) + 1e-9);
}

TEST(RaslLoss, NonFiniteLogitIsNumericError) {
    RaslParams p;
    EXPECT_THROW(rasl_loss(one(std::nan("")), lab(1), p), numeric_error);
    EXPECT_THROW(rasl_grad(one(INFINITY), lab(0), p), numeric_error);
}

TEST(RaslLoss, ParameterValidation) {
    RaslParams p;
    p.delta = 1.0;
    EXPECT_THROW(rasl_loss(one(0.0), lab(0), p), validation_error);
    p = RaslParams{};
    p.gamma_neg = -1.0;
    EXPECT_THROW(rasl_loss(one(0.0), lab(0), p), validation_error);
    p = RaslParams{};
    p.alphas = Vector::Constant(2, 1.0);
    EXPECT_THROW(rasl_loss(one(0.0), lab(0), p), validation_error);
    p.alphas = Vector::Constant(1, 0.0);
    EXPECT_THROW(rasl_loss(one(0.0), lab(0), p), validation_error);
    EXPECT_THROW(rasl_loss(Matrix::Zero(1, 2), lab(0), RaslParams{}), validation_error);
}

TEST(RaslGrad, MatchesFiniteDifferences) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> uz(-6.0, 6.0), ug(0.0, 4.0), ud(0.0, 0.2), ua(0.2, 5.0);
    const double h = 1e-5;
    int checked = 0;
    for (int t = 0; t < 3000; ++t) {
        RaslParams p;
        p.gamma_pos = ug(gen);
        p.gamma_neg = ug(gen);
        p.delta = ud(gen);
        p.alphas = Vector::Constant(1, ua(gen));
        const double z = uz(gen);
        const int y = static_cast<int>(gen() % 2);
        if (y == 0) {
            // skip the margin kink and the region where q^(g-1) is singular
            const double prob = 1.0 / (1.0 + std::exp(-z));
            if (std::abs(prob - p.delta) < 1e-3) continue;
        }
        const double num =
            (rasl_loss(one(z + h), lab(y), p).total - rasl_loss(one(z - h), lab(y), p).total) / (2.0 * h);
        const double ana = rasl_grad(one(z), lab(y), p)(0, 0);
        ASSERT_TRUE(close_rel(ana, num, 1e-5, 1e-9)) << "z=" << z << " y=" << y << " g+=" << p.gamma_pos
                                                     << " g-=" << p.gamma_neg << " d=" << p.delta << ": " << ana
                                                     << " vs " << num;
        ++checked;
    }
    EXPECT_GT(checked, 2500);
}
