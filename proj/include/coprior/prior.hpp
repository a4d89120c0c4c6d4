#pragma once
// Label co-occurrence statistics: counts, conditional probabilities and the
// per-class loss weights derived from them.

#include <algorithm>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "coprior/dataset.hpp"
#include "coprior/error.hpp"
#include "coprior/matrix.hpp"

namespace coprior {

// c_mn = number of samples where classes m and n are both present.
struct CoocMatrix {
    IntMatrix counts;

    std::size_t n_classes() const { return static_cast<std::size_t>(counts.rows()); }
};

// a_mn = c_mn / c_mm, the empirical P(n present | m present).
struct CondProbMatrix {
    Matrix probs;
    std::vector<std::size_t> zero_count_classes;

    std::size_t n_classes() const { return static_cast<std::size_t>(probs.rows()); }

    static CondProbMatrix from_probs(Matrix probs) {
        detail::require(probs.rows() == probs.cols() && probs.rows() >= 1, "conditional probability matrix must be square");
        detail::require(probs.allFinite(), "conditional probability matrix has non-finite entries");
        detail::require((probs.array() >= 0.0).all() && (probs.array() <= 1.0).all(),
                        "conditional probabilities must lie in [0, 1]");
        return CondProbMatrix{std::move(probs), {}};
    }
};

enum class ReweightMode { frequency, literal, none };

inline std::string_view to_string(ReweightMode m) {
    switch (m) {
        case ReweightMode::frequency: return "frequency";
        case ReweightMode::literal: return "literal";
        case ReweightMode::none: return "none";
    }
    return "?";
}

inline ReweightMode parse_reweight_mode(std::string_view s) {
    if (s == "frequency") return ReweightMode::frequency;
    if (s == "literal") return ReweightMode::literal;
    if (s == "none") return ReweightMode::none;
    throw validation_error("unknown reweight mode '" + std::string(s) + "' (expected frequency, literal or none)");
}

struct ReweightVector {
    Vector alphas;
    ReweightMode mode = ReweightMode::frequency;

    std::size_t n_classes() const { return static_cast<std::size_t>(alphas.size()); }

    static ReweightVector ones(std::size_t n) { return {Vector::Ones(static_cast<Eigen::Index>(n)), ReweightMode::none}; }
};

inline CoocMatrix cooccurrence(const LabelMatrix& labels) {
    const IntMatrix& y = labels.values();
    return CoocMatrix{y.transpose() * y};
}

inline CondProbMatrix conditional_prob(const CoocMatrix& cooc) {
    const auto n = cooc.counts.rows();
    CondProbMatrix out{Matrix::Zero(n, n), {}};
    for (Eigen::Index m = 0; m < n; ++m) {
        const auto diag = cooc.counts(m, m);
        if (diag == 0) {
            // Never observed: the node only propagates its own logit.
            out.probs(m, m) = 1.0;
            out.zero_count_classes.push_back(static_cast<std::size_t>(m));
            continue;
        }
        for (Eigen::Index k = 0; k < n; ++k)
            out.probs(m, k) = static_cast<double>(cooc.counts(m, k)) / static_cast<double>(diag);
    }
    return out;
}

// frequency: alpha_j = (sum_k c_kk) / max(c_jj, 1), the inverse share of class j
//            among all positive labels.
// literal:   alpha_j = (a_jj / sum_k a_kk)^-1 with a_jj = 1, i.e. N for every class.
// none:      alpha_j = 1.
inline ReweightVector reweighting(const CoocMatrix& cooc, ReweightMode mode = ReweightMode::frequency) {
    const auto n = cooc.counts.rows();
    ReweightVector out{Vector::Ones(n), mode};
    switch (mode) {
        case ReweightMode::frequency: {
            const double total = static_cast<double>(cooc.counts.diagonal().sum());
            for (Eigen::Index j = 0; j < n; ++j) {
                const double cjj = static_cast<double>(std::max<std::int64_t>(cooc.counts(j, j), 1));
                out.alphas(j) = total > 0.0 ? total / cjj : 1.0;
            }
            break;
        }
        case ReweightMode::literal: out.alphas.setConstant(static_cast<double>(n)); break;
        case ReweightMode::none: break;
    }
    return out;
}

// Mean of the k largest off-diagonal entries in row m.
inline double top_k_mean_condprob(const CondProbMatrix& a, std::size_t m, std::size_t k) {
    const auto n = a.n_classes();
    detail::require(m < n, "class index out of range");
    detail::require(k >= 1 && k + 1 <= n, "top-k needs 1 <= k <= N-1");
    std::vector<double> off;
    off.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
        if (j != m) off.push_back(a.probs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)));
    std::partial_sort(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(k), off.end(), std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += off[i];
    return sum / static_cast<double>(k);
}

}  // namespace coprior
