#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "coprior/metrics.hpp"
#include "test_support.hpp"

using namespace coprior;

namespace {

double logit_of(double p) { return std::log(p / (1.0 - p)); }

LabelMatrix labels_of(const IntMatrix& v) { return LabelMatrix::with_default_names(v); }

}  // namespace

TEST(AveragePrecision, Examples) {
    EXPECT_EQ(average_precision(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}), 1.0);
    EXPECT_EQ(average_precision(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}), 0.5);
    EXPECT_EQ(average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
    EXPECT_EQ(average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}), 1.0);
}

TEST(AveragePrecision, Errors) {
    EXPECT_THROW(average_precision(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), validation_error);
    EXPECT_THROW(average_precision(std::vector<double>{0.1}, std::vector<int>{0, 1}), validation_error);
}

TEST(AveragePrecision, MatchesBruteForceOracle) {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + gen() % 12;
        std::vector<double> s(n);
        std::vector<int> y(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(gen() % 5) * 0.25;  // coarse grid forces ties
            y[i] = static_cast<int>(gen() % 2);
            any = any || y[i];
        }
        if (!any) y[gen() % n] = 1;
        ASSERT_NEAR(average_precision(s, y), coprior::testing::brute_average_precision(s, y), 1e-12);
    }
}

TEST(AveragePrecision, InvariantUnderMonotoneTransforms) {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(30), e(30), a(30);
        std::vector<int> y(30);
        for (int i = 0; i < 30; ++i) {
            s[i] = u(gen);
            e[i] = std::exp(s[i]);
            a[i] = 2.5 * s[i] + 7.0;
            y[i] = static_cast<int>(gen() % 2);
        }
        y[0] = 1;
        const double base = average_precision(s, y);
        EXPECT_DOUBLE_EQ(average_precision(e, y), base);
        EXPECT_DOUBLE_EQ(average_precision(a, y), base);
        EXPECT_GE(base, 0.0);
        EXPECT_LE(base, 1.0);
    }
}

TEST(Evaluate, PerfectPredictions) {
    IntMatrix y(3, 2);
    y << 1, 0, 0, 1, 1, 1;
    const Matrix scores = (y.cast<double>().array() * 20.0 - 10.0).matrix();
    const auto r = evaluate(scores, labels_of(y));
    EXPECT_EQ(r.map, 1.0);
    for (double v : {r.cp, r.cr, r.cf1, r.op, r.or_, r.of1}) EXPECT_EQ(v, 1.0);
}

TEST(Evaluate, HandCountedTwoByTwo) {
    IntMatrix y(2, 2);
    y << 1, 0, 0, 1;
    Matrix s(2, 2);
    s << logit_of(0.9), logit_of(0.2), logit_of(0.6), logit_of(0.8);
    const auto r = evaluate(s, labels_of(y));
    EXPECT_DOUBLE_EQ(r.cp, 0.75);
    EXPECT_DOUBLE_EQ(r.cr, 1.0);
    EXPECT_DOUBLE_EQ(r.op, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.or_, 1.0);
    EXPECT_DOUBLE_EQ(r.cf1, 2.0 * 0.75 / 1.75);
    EXPECT_DOUBLE_EQ(r.of1, 0.8);
}

TEST(Evaluate, AllNegativePredictions) {
    IntMatrix y(2, 2);
    y << 1, 0, 0, 1;
    const auto r = evaluate(Matrix::Constant(2, 2, -5.0), labels_of(y));
    EXPECT_EQ(r.op, 0.0);
    EXPECT_EQ(r.or_, 0.0);
    EXPECT_EQ(r.cp, 0.0);
    EXPECT_EQ(r.of1, 0.0);
}

TEST(Evaluate, ClassesWithoutPositivesAreExcluded) {
    IntMatrix y(3, 3);
    y << 1, 0, 0, 0, 1, 0, 1, 1, 0;
    std::mt19937_64 gen(1);
    const Matrix s = coprior::testing::random_matrix(gen, 3, 3, -1.0, 1.0);
    const auto r = evaluate(s, labels_of(y));
    EXPECT_EQ(r.excluded_classes, (std::vector<std::size_t>{2}));
    EXPECT_TRUE(std::isnan(r.per_class_ap[2]));
    EXPECT_DOUBLE_EQ(r.map, 0.5 * (r.per_class_ap[0] + r.per_class_ap[1]));
}

TEST(Evaluate, TopKMode) {
    IntMatrix y(2, 3);
    y << 1, 0, 0, 0, 1, 1;
    Matrix s(2, 3);
    s << 3, 2, 1, 1, 2, 3;
    EvalOptions o;
    o.mode = PredictionMode::topk;
    o.topk = 1;
    const auto r = evaluate(s, labels_of(y), o);
    // predictions: (0,0) and (1,2)
    EXPECT_DOUBLE_EQ(r.op, 1.0);
    EXPECT_DOUBLE_EQ(r.or_, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.cp, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.cr, 2.0 / 3.0);
    EXPECT_EQ(r.topk, 1u);
    o.topk = 4;
    EXPECT_THROW(evaluate(s, labels_of(y), o), validation_error);
}

TEST(Evaluate, InputErrors) {
    IntMatrix y = IntMatrix::Ones(2, 2);
    EXPECT_THROW(evaluate(Matrix::Zero(3, 2), labels_of(y)), validation_error);
    EvalOptions o;
    o.threshold = 1.0;
    EXPECT_THROW(evaluate(Matrix::Zero(2, 2), labels_of(y), o), validation_error);
}

TEST(Spearman, KnownValues) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}).first, 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}).first, -1.0);
    // ranks x: 1 2 3, y: 1.5 1.5 3 -> r = 0.866..
    EXPECT_NEAR(spearman({1, 2, 3}, {5, 5, 9}).first, std::sqrt(3.0) / 2.0, 1e-15);
    EXPECT_FALSE(spearman({1, 2, 3}, {0, 0, 0}).second);
    EXPECT_FALSE(spearman({1}, {2}).second);
}

TEST(DeltaApAnalysis, EqualApsGiveZeroBinsAndUndefinedCorrelation) {
    CondProbMatrix a{Matrix::Identity(4, 4), {}};
    a.probs(0, 1) = a.probs(1, 0) = 0.9;
    const std::vector<double> ap{0.5, 0.6, 0.7, 0.8};
    const auto r = delta_ap_analysis(ap, ap, a);
    for (const auto& b : r.bins) EXPECT_EQ(b.mean_delta_ap, 0.0);
    EXPECT_FALSE(r.spearman_defined);
    EXPECT_EQ(r.spearman, 0.0);
}

TEST(DeltaApAnalysis, NearbyValuesShareABin) {
    CondProbMatrix a{Matrix::Identity(4, 4), {}};
    a.probs.row(0) << 1, 0.033, 0, 0;  // top-3 mean 0.011
    a.probs.row(1) << 0.039, 1, 0, 0;  // top-3 mean 0.013
    a.probs.row(2) << 0.3, 0.3, 1, 0.3;
    a.probs.row(3) << 0.3, 0.3, 0.3, 1;
    const auto r = delta_ap_analysis({0.1, 0.2, 0.3, 0.4}, {0.2, 0.2, 0.5, 0.5}, a);
    ASSERT_EQ(r.bins.size(), 2u);
    EXPECT_EQ(r.bins[0].class_count, 2u);
    EXPECT_DOUBLE_EQ(r.bins[0].bin_low, 0.0);
    EXPECT_DOUBLE_EQ(r.bins[0].bin_high, 0.02);
    EXPECT_NEAR(r.bins[0].mean_delta_ap, 0.05, 1e-15);
    EXPECT_EQ(r.bins[1].class_count, 2u);
    EXPECT_NEAR(r.bins[1].bin_low, 0.30, 1e-15);
    EXPECT_TRUE(r.spearman_defined);
    EXPECT_GT(r.spearman, 0.0);
}

TEST(DeltaApAnalysis, BinBoundariesAreExact) {
    EXPECT_EQ(delta_bin_index(0.04, 0.02), 2);
    EXPECT_EQ(delta_bin_index(0.06, 0.02), 3);
    EXPECT_EQ(delta_bin_index(0.0, 0.02), 0);
    EXPECT_EQ(delta_bin_index(1.0, 0.02), 50);
    EXPECT_EQ(delta_bin_index(0.019999, 0.02), 0);
}

TEST(DeltaApAnalysis, SkipsUndefinedApAndChecksLengths) {
    CondProbMatrix a{Matrix::Identity(3, 3), {}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto r = delta_ap_analysis({0.1, nan, 0.3}, {0.2, nan, 0.3}, a, 2);
    EXPECT_EQ(r.classes.size(), 2u);
    EXPECT_THROW(delta_ap_analysis({0.1}, {0.1}, a), validation_error);
}
