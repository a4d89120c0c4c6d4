#pragma once
// Training the refinement head: summed RASL over mini-batches, plain or
// momentum SGD, cosine-annealed learning rate stepped once per epoch.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "coprior/dataset.hpp"
#include "coprior/error.hpp"
#include "coprior/gcn.hpp"
#include "coprior/loss.hpp"
#include "coprior/metrics.hpp"
#include "coprior/prior.hpp"
#include "coprior/rng.hpp"

namespace coprior {

inline double cosine_lr(double lr0, std::size_t step, std::size_t total_steps) {
    detail::require(total_steps >= 1, "cosine_lr: total_steps must be >= 1");
    if (step > total_steps) throw validation_error("cosine_lr: step exceeds total_steps");
    if (step == 0) return lr0;
    if (step == total_steps) return 0.0;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

struct SgdVelocity {
    std::vector<Matrix> v;
};

// v <- momentum * v + g;  W <- W - lr * v
inline void sgd_step(GcnModel& model, const GcnGradients& grads, double lr, double momentum, SgdVelocity& velocity) {
    detail::require(grads.d_weights.size() == model.weights.size(), "sgd_step: gradient count mismatch");
    if (velocity.v.empty())
        for (const auto& w : model.weights) velocity.v.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        detail::require(grads.d_weights[l].rows() == model.weights[l].rows() &&
                            grads.d_weights[l].cols() == model.weights[l].cols() &&
                            velocity.v[l].rows() == model.weights[l].rows() &&
                            velocity.v[l].cols() == model.weights[l].cols(),
                        "sgd_step: shape mismatch at layer " + std::to_string(l + 1));
        velocity.v[l] = momentum * velocity.v[l] + grads.d_weights[l];
        model.weights[l] -= lr * velocity.v[l];
    }
}

// Objective of one mini-batch: the summed loss, or that sum divided by the
// number of samples in the batch.
enum class LossReduction { sample_mean, sum };

inline std::string_view to_string(LossReduction r) { return r == LossReduction::sum ? "sum" : "sample_mean"; }

inline LossReduction parse_loss_reduction(std::string_view s) {
    if (s == "sample_mean") return LossReduction::sample_mean;
    if (s == "sum") return LossReduction::sum;
    throw validation_error("unknown loss reduction '" + std::string(s) + "' (expected sample_mean or sum)");
}

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr0 = 0.002;
    double momentum = 0.0;
    std::uint64_t seed = 0;
    RaslParams rasl;  // alphas are filled in from the prior
    std::vector<std::size_t> gcn_dims{1, 64, 64, 1};
    double leaky_slope = 0.01;
    bool final_nonlinearity = false;
    Propagation propagation = Propagation::row_normalized;
    LossReduction reduction = LossReduction::sample_mean;
    ReweightMode reweight_mode = ReweightMode::frequency;
    std::size_t threads = 1;

    void validate() const {
        detail::require(epochs >= 1, "epochs must be >= 1");
        detail::require(batch_size >= 1, "batch_size must be >= 1");
        detail::require(lr0 > 0.0 && std::isfinite(lr0), "lr0 must be > 0");
        detail::require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
        detail::require(threads >= 1, "threads must be >= 1");
    }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double mean_loss = 0.0;  // summed loss over the epoch divided by the sample count
    double lr = 0.0;
    std::optional<double> val_map;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    GcnModel model;
    ReweightVector alphas;
    CondProbMatrix cond_prob;
    CoocMatrix cooc;
    TrainHistory history;
};

// Refines logits in chunks of the given size.
inline Matrix refine(const GcnModel& model, const CondProbMatrix& a, const Matrix& logits, std::size_t chunk = 256) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index start = 0; start < logits.rows(); start += static_cast<Eigen::Index>(chunk)) {
        const auto len = std::min<Eigen::Index>(static_cast<Eigen::Index>(chunk), logits.rows() - start);
        out.middleRows(start, len) = gcn_forward(model, a, logits.middleRows(start, len)).refined;
    }
    return out;
}

namespace detail {

// Samples per gradient chunk. Fixed so that the reduction order, and therefore
// the result, does not depend on the thread count.
inline constexpr std::size_t kGradChunk = 8;

struct BatchStep {
    double loss = 0.0;
    GcnGradients grads;
};

inline BatchStep batch_gradient(const GcnModel& model, const CondProbMatrix& a, const RaslParams& rasl,
                                const Matrix& logits, const IntMatrix& labels, const std::vector<std::size_t>& idx,
                                std::size_t threads) {
    const std::size_t n_chunks = (idx.size() + kGradChunk - 1) / kGradChunk;
    std::vector<BatchStep> parts(n_chunks);
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * kGradChunk;
        const std::size_t end = std::min(idx.size(), begin + kGradChunk);
        Matrix h0(static_cast<Eigen::Index>(end - begin), logits.cols());
        IntMatrix y(h0.rows(), labels.cols());
        for (std::size_t r = begin; r < end; ++r) {
            h0.row(static_cast<Eigen::Index>(r - begin)) = logits.row(static_cast<Eigen::Index>(idx[r]));
            y.row(static_cast<Eigen::Index>(r - begin)) = labels.row(static_cast<Eigen::Index>(idx[r]));
        }
        auto fwd = gcn_forward(model, a, h0);
        parts[c].loss = rasl_loss(fwd.refined, y, rasl).total;
        parts[c].grads = gcn_backward(model, a, fwd.cache, rasl_grad(fwd.refined, y, rasl));
    };
    if (threads <= 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t c = t; c < n_chunks; c += threads) run_chunk(c);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        pool.clear();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    BatchStep total{0.0, {}};
    for (const auto& w : model.weights) total.grads.d_weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& p : parts) {
        total.loss += p.loss;
        for (std::size_t l = 0; l < total.grads.d_weights.size(); ++l) total.grads.d_weights[l] += p.grads.d_weights[l];
    }
    return total;
}

}  // namespace detail

// Derived seeds: "init" for the weights, "batches" (keyed by epoch) for the
// mini-batch order.
inline TrainResult train(const LabelMatrix& labels, const LogitMatrix& logits, const TrainConfig& config,
                         const std::optional<DataPart>& validation = std::nullopt) {
    config.validate();
    detail::require(labels.n_samples() == logits.n_samples() && labels.n_classes() == logits.n_classes(),
                    "train: labels and logits are not aligned");
    if (validation)
        detail::require(validation->labels.n_classes() == labels.n_classes(),
                        "train: validation data has a different class count");

    TrainResult r;
    r.cooc = cooccurrence(labels);
    r.cond_prob = conditional_prob(r.cooc);
    r.alphas = config.reweight_mode == ReweightMode::none ? ReweightVector::ones(labels.n_classes())
                                                          : reweighting(r.cooc, config.reweight_mode);
    RaslParams rasl = config.rasl;
    rasl.alphas = r.alphas.alphas;
    rasl.validate(labels.n_classes());

    r.model = init_model(config.gcn_dims, config.leaky_slope, derive_seed(config.seed, "init"),
                         config.final_nonlinearity, config.propagation);
    SgdVelocity velocity;
    const auto batch_seed = derive_seed(config.seed, "batches");

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = cosine_lr(config.lr0, epoch, config.epochs);
        double epoch_loss = 0.0;
        for (const auto& idx : batches(labels.n_samples(), config.batch_size, batch_seed, epoch)) {
            auto step = detail::batch_gradient(r.model, r.cond_prob, rasl, logits.values(), labels.values(), idx,
                                               config.threads);
            epoch_loss += step.loss;
            if (config.reduction == LossReduction::sample_mean)
                for (auto& g : step.grads.d_weights) g /= static_cast<double>(idx.size());
            sgd_step(r.model, step.grads, lr, config.momentum, velocity);
        }
        EpochRecord rec{epoch, epoch_loss / static_cast<double>(labels.n_samples()), lr, std::nullopt};
        if (!std::isfinite(rec.mean_loss))
            throw numeric_error("training diverged: non-finite mean loss at epoch " + std::to_string(epoch) +
                                " (lr " + detail::format_double(lr) + ")");
        if (validation) {
            const Matrix refined = refine(r.model, r.cond_prob, validation->logits.values());
            rec.val_map = evaluate(refined, validation->labels).map;
        }
        r.history.epochs.push_back(rec);
    }
    return r;
}

}  // namespace coprior
