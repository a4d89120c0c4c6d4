#pragma once
// Multi-label evaluation: per-class AP, mAP, per-class and overall
// precision / recall / F1, and the refinement-gain vs co-occurrence analysis.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "coprior/dataset.hpp"
#include "coprior/error.hpp"
#include "coprior/matrix.hpp"
#include "coprior/prior.hpp"

namespace coprior {

// AP = (1/P) * sum over positive ranks k of precision@k, with samples sorted by
// descending score and ties broken by ascending index.
template <typename Scores, typename Labels>
double average_precision(const Scores& scores, const Labels& labels) {
    const auto n = static_cast<std::size_t>(std::size(scores));
    detail::require(n == static_cast<std::size_t>(std::size(labels)), "average_precision: length mismatch");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t rank = 0; rank < n; ++rank) {
        if (labels[order[rank]] != 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    if (hits == 0) throw validation_error("average_precision: no positive labels");
    return sum / static_cast<double>(hits);
}

enum class PredictionMode { threshold, topk };

struct EvalOptions {
    PredictionMode mode = PredictionMode::threshold;
    double threshold = 0.5;  // on sigmoid(score)
    std::size_t topk = 3;
};

struct MetricsReport {
    std::vector<double> per_class_ap;  // NaN for excluded classes
    double map = 0.0;
    double cp = 0.0, cr = 0.0, cf1 = 0.0;
    double op = 0.0, or_ = 0.0, of1 = 0.0;
    double threshold = 0.5;
    PredictionMode mode = PredictionMode::threshold;
    std::size_t topk = 0;
    std::vector<std::size_t> excluded_classes;  // no positive labels
};

namespace detail {

inline double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace detail

// Per-class AP for every class with at least one positive; NaN otherwise.
inline std::vector<double> per_class_average_precision(const Matrix& scores, const IntMatrix& labels) {
    std::vector<double> ap(static_cast<std::size_t>(scores.cols()), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> col(static_cast<std::size_t>(scores.rows()));
    std::vector<std::int64_t> lab(col.size());
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
        bool any = false;
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            col[static_cast<std::size_t>(i)] = scores(i, j);
            lab[static_cast<std::size_t>(i)] = labels(i, j);
            any = any || labels(i, j) != 0;
        }
        if (any) ap[static_cast<std::size_t>(j)] = average_precision(col, lab);
    }
    return ap;
}

inline MetricsReport evaluate(const Matrix& scores, const LabelMatrix& labels, const EvalOptions& opts = {}) {
    const IntMatrix& y = labels.values();
    detail::require(scores.rows() > 0 && scores.cols() > 0, "evaluate: empty input");
    detail::require(scores.rows() == y.rows() && scores.cols() == y.cols(), "evaluate: scores and labels differ in shape");
    detail::require(scores.allFinite(), "evaluate: non-finite score");
    if (opts.mode == PredictionMode::threshold)
        detail::require(opts.threshold > 0.0 && opts.threshold < 1.0, "evaluate: threshold must be in (0, 1)");
    else
        detail::require(opts.topk >= 1 && opts.topk <= static_cast<std::size_t>(scores.cols()),
                        "evaluate: topk must be in [1, N]");

    const auto n = scores.rows();
    const auto k = scores.cols();
    IntMatrix pred = IntMatrix::Zero(n, k);
    if (opts.mode == PredictionMode::threshold) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < k; ++j)
                pred(i, j) = 1.0 / (1.0 + std::exp(-scores(i, j))) >= opts.threshold ? 1 : 0;
    } else {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < n; ++i) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](Eigen::Index a, Eigen::Index b) { return scores(i, a) > scores(i, b); });
            for (std::size_t t = 0; t < opts.topk; ++t) pred(i, order[t]) = 1;
        }
    }

    MetricsReport r;
    r.threshold = opts.threshold;
    r.mode = opts.mode;
    r.topk = opts.mode == PredictionMode::topk ? opts.topk : 0;
    r.per_class_ap = per_class_average_precision(scores, y);

    double ap_sum = 0.0, precision_sum = 0.0, recall_sum = 0.0;
    std::size_t ap_count = 0;
    std::int64_t tp_all = 0, pred_all = 0, pos_all = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
        const std::int64_t tp = (pred.col(j).array() * y.col(j).array()).sum();
        const std::int64_t predicted = pred.col(j).sum();
        const std::int64_t positives = y.col(j).sum();
        tp_all += tp;
        pred_all += predicted;
        pos_all += positives;
        precision_sum += detail::ratio_or_zero(static_cast<double>(tp), static_cast<double>(predicted));
        if (positives == 0) {
            r.excluded_classes.push_back(static_cast<std::size_t>(j));
            continue;
        }
        recall_sum += static_cast<double>(tp) / static_cast<double>(positives);
        ap_sum += r.per_class_ap[static_cast<std::size_t>(j)];
        ++ap_count;
    }
    r.map = ap_count ? ap_sum / static_cast<double>(ap_count) : 0.0;
    r.cp = precision_sum / static_cast<double>(k);
    r.cr = ap_count ? recall_sum / static_cast<double>(ap_count) : 0.0;
    r.cf1 = detail::harmonic(r.cp, r.cr);
    r.op = detail::ratio_or_zero(static_cast<double>(tp_all), static_cast<double>(pred_all));
    r.or_ = detail::ratio_or_zero(static_cast<double>(tp_all), static_cast<double>(pos_all));
    r.of1 = detail::harmonic(r.op, r.or_);
    return r;
}

// ---------------------------------------------------------------------------
// Refinement gain vs co-occurrence strength

struct DeltaApBin {
    double bin_low = 0.0;
    double bin_high = 0.0;
    double mean_delta_ap = 0.0;
    std::size_t class_count = 0;
};

struct ClassDelta {
    std::size_t class_index = 0;
    double top_k_condprob = 0.0;
    double ap_before = 0.0;
    double ap_after = 0.0;
    double delta = 0.0;
};

struct DeltaApAnalysis {
    std::vector<ClassDelta> classes;  // classes with a finite AP before and after
    std::vector<DeltaApBin> bins;     // sorted by bin_low
    double spearman = 0.0;
    bool spearman_defined = false;  // false when either variable is constant
};

namespace detail {

// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

// Spearman rank correlation; nullopt-like (defined = false, value 0) if degenerate.
inline std::pair<double, bool> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    detail::require(x.size() == y.size(), "spearman: length mismatch");
    if (x.size() < 2) return {0.0, false};
    const auto rx = detail::average_ranks(x);
    const auto ry = detail::average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return {0.0, false};
    return {sxy / std::sqrt(sxx * syy), true};
}

// Bin index for x with bin width w; guards against 0.04 / 0.02 = 1.9999...
inline long delta_bin_index(double x, double width) {
    const double q = x / width;
    auto idx = static_cast<long>(std::floor(q));
    if (static_cast<double>(idx + 1) * width <= x) ++idx;
    if (static_cast<double>(idx) * width > x) --idx;
    return idx;
}

inline DeltaApAnalysis delta_ap_analysis(const std::vector<double>& ap_before, const std::vector<double>& ap_after,
                                         const CondProbMatrix& a, std::size_t k = 3, double bin_width = 0.02) {
    detail::require(ap_before.size() == ap_after.size() && ap_before.size() == a.n_classes(),
                    "delta_ap_analysis: AP vectors and prior differ in class count");
    detail::require(bin_width > 0.0, "delta_ap_analysis: bin width must be > 0");
    DeltaApAnalysis out;
    std::map<long, std::pair<double, std::size_t>> groups;
    for (std::size_t j = 0; j < ap_before.size(); ++j) {
        if (!std::isfinite(ap_before[j]) || !std::isfinite(ap_after[j])) continue;
        ClassDelta c{j, top_k_mean_condprob(a, j, k), ap_before[j], ap_after[j], ap_after[j] - ap_before[j]};
        auto& g = groups[delta_bin_index(c.top_k_condprob, bin_width)];
        g.first += c.delta;
        g.second += 1;
        out.classes.push_back(c);
    }
    for (const auto& [idx, g] : groups) {
        out.bins.push_back({static_cast<double>(idx) * bin_width, static_cast<double>(idx + 1) * bin_width,
                            g.first / static_cast<double>(g.second), g.second});
    }
    std::vector<double> xs, ds;
    for (const auto& c : out.classes) {
        xs.push_back(c.top_k_condprob);
        ds.push_back(c.delta);
    }
    std::tie(out.spearman, out.spearman_defined) = spearman(xs, ds);
    return out;
}

}  // namespace coprior
