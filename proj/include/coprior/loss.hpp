#pragma once
// Reweighted asymmetric loss on sigmoid probabilities p = sigmoid(z):
//
//   y = 1:  l = -alpha_j (1 - p)^g+ log(max(p, eps))
//   y = 0:  l = -alpha_j q^g- log(max(1 - q, eps)),   q = max(p - delta, 0)
//
// summed over all samples and classes.

#include <cmath>
#include <string>

#include "coprior/error.hpp"
#include "coprior/matrix.hpp"
#include "coprior/prior.hpp"

namespace coprior {

struct RaslParams {
    double gamma_pos = 1.0;
    double gamma_neg = 3.0;
    double delta = 0.05;
    double eps = 1e-8;
    Vector alphas;  // per class; empty means all ones

    void validate(std::size_t n_classes) const {
        detail::require(gamma_pos >= 0.0 && std::isfinite(gamma_pos), "gamma_pos must be >= 0");
        detail::require(gamma_neg >= 0.0 && std::isfinite(gamma_neg), "gamma_neg must be >= 0");
        detail::require(delta >= 0.0 && delta < 1.0, "delta must be in [0, 1)");
        detail::require(eps > 0.0 && eps <= 1e-4, "eps must be in (0, 1e-4]");
        if (alphas.size() != 0) {
            detail::require(alphas.size() == static_cast<Eigen::Index>(n_classes),
                            "alpha vector length does not match class count");
            detail::require(alphas.allFinite() && (alphas.array() > 0.0).all(), "alphas must be positive and finite");
        }
    }

    double alpha(Eigen::Index j) const { return alphas.size() == 0 ? 1.0 : alphas(j); }
};

struct RaslResult {
    double total = 0.0;
    Matrix per_element;
};

namespace detail {

// p and 1 - p, each computed without cancellation.
inline std::pair<double, double> sigmoid_pair(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return {1.0 / (1.0 + e), e / (1.0 + e)};
    }
    const double e = std::exp(z);
    return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

inline void check_loss_inputs(const Matrix& logits, const IntMatrix& labels, const RaslParams& params) {
    if (logits.rows() != labels.rows() || logits.cols() != labels.cols())
        throw validation_error("loss: logits and labels differ in shape");
    if (!logits.allFinite()) throw numeric_error("loss: non-finite logit");
    params.validate(static_cast<std::size_t>(logits.cols()));
}

}  // namespace detail

inline RaslResult rasl_loss(const Matrix& logits, const IntMatrix& labels, const RaslParams& params) {
    detail::check_loss_inputs(logits, labels, params);
    RaslResult r{0.0, Matrix::Zero(logits.rows(), logits.cols())};
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const auto [p, one_minus_p] = detail::sigmoid_pair(logits(i, j));
            double l = 0.0;
            if (labels(i, j) == 1) {
                l = -params.alpha(j) * std::pow(one_minus_p, params.gamma_pos) * std::log(std::max(p, params.eps));
            } else if (p > params.delta) {
                const double q = p - params.delta;
                const double one_minus_q = one_minus_p + params.delta;
                l = -params.alpha(j) * std::pow(q, params.gamma_neg) * std::log(std::max(one_minus_q, params.eps));
            }
            r.per_element(i, j) = l;
        }
    }
    // Fixed row-major summation order.
    for (Eigen::Index k = 0; k < r.per_element.size(); ++k) r.total += r.per_element.data()[k];
    return r;
}

// d total / d logit, elementwise.
inline Matrix rasl_grad(const Matrix& logits, const IntMatrix& labels, const RaslParams& params) {
    detail::check_loss_inputs(logits, labels, params);
    Matrix g = Matrix::Zero(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const auto [p, one_minus_p] = detail::sigmoid_pair(logits(i, j));
            const double dp_dz = p * one_minus_p;
            const double alpha = params.alpha(j);
            if (labels(i, j) == 1) {
                // d/dz of -(1-p)^g log p = g (1-p)^g p log p - (1-p)^(g+1)
                const double gp = params.gamma_pos;
                double d = gp > 0.0 ? gp * std::pow(one_minus_p, gp) * p * std::log(std::max(p, params.eps)) : 0.0;
                if (p > params.eps) d -= std::pow(one_minus_p, gp + 1.0);
                g(i, j) = alpha * d;
            } else if (p > params.delta) {
                const double q = p - params.delta;
                const double one_minus_q = one_minus_p + params.delta;
                const double gn = params.gamma_neg;
                // dl/dq = -(g q^(g-1) log(1-q) - q^g / (1-q))
                double dl_dq = 0.0;
                if (gn > 0.0) dl_dq -= gn * std::pow(q, gn - 1.0) * std::log(std::max(one_minus_q, params.eps));
                if (one_minus_q > params.eps) dl_dq += std::pow(q, gn) / one_minus_q;
                g(i, j) = alpha * dl_dq * dp_dz;
            }
        }
    }
    return g;
}

}  // namespace coprior
