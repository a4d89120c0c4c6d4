#pragma once
// Graph convolution over class nodes with the conditional-probability matrix
// as fixed propagation weights.
//
// Each sample is an independent graph signal: its N initial logits form the
// N x 1 node features H^0. Layer l computes
//
//     H^l = rho(A H^{l-1} W^l),     W^l : d_{l-1} x d_l,
//
// with rho = LeakyReLU on hidden layers (and on the last layer only when
// final_nonlinearity is set). The refined logits are h0 + H^L.
//
// The propagation operator is either A itself or its row-normalized form
// D^-1 A (D = diag of row sums), which keeps each layer's gain near 1.
//
// Batched features are stored as (batch * N) x d row-major matrices, with
// sample b occupying rows [b*N, (b+1)*N).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "coprior/dataset.hpp"
#include "coprior/error.hpp"
#include "coprior/matrix.hpp"
#include "coprior/prior.hpp"
#include "coprior/rng.hpp"

namespace coprior {

enum class Propagation { row_normalized, raw };

inline std::string_view to_string(Propagation p) { return p == Propagation::raw ? "raw" : "row_normalized"; }

inline Propagation parse_propagation(std::string_view s) {
    if (s == "row_normalized") return Propagation::row_normalized;
    if (s == "raw") return Propagation::raw;
    throw validation_error("unknown propagation '" + std::string(s) + "' (expected row_normalized or raw)");
}

struct GcnModel {
    std::vector<std::size_t> layer_dims;  // d_0 = 1, ..., d_L = 1
    std::vector<Matrix> weights;          // L matrices, weights[l-1] is W^l
    double leaky_slope = 0.01;
    bool final_nonlinearity = false;
    Propagation propagation = Propagation::row_normalized;

    std::size_t n_layers() const { return weights.size(); }

    void validate() const {
        detail::require(layer_dims.size() >= 2, "GCN needs at least one layer");
        detail::require(layer_dims.front() == 1 && layer_dims.back() == 1,
                        "GCN layer_dims must start and end with 1");
        for (auto d : layer_dims) detail::require(d >= 1, "GCN layer widths must be >= 1");
        detail::require(leaky_slope > 0.0 && leaky_slope < 1.0, "leaky_slope must be in (0, 1)");
        detail::require(weights.size() + 1 == layer_dims.size(), "GCN weight count does not match layer_dims");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            detail::require(weights[l].rows() == static_cast<Eigen::Index>(layer_dims[l]) &&
                                weights[l].cols() == static_cast<Eigen::Index>(layer_dims[l + 1]),
                            "GCN weight " + std::to_string(l + 1) + " has the wrong shape");
            detail::require(weights[l].allFinite(), "GCN weight " + std::to_string(l + 1) + " is not finite");
        }
    }

    bool activates(std::size_t layer_index) const {
        return layer_index + 1 < weights.size() || final_nonlinearity;
    }

    friend bool operator==(const GcnModel& a, const GcnModel& b) {
        return a.layer_dims == b.layer_dims && a.weights == b.weights && a.leaky_slope == b.leaky_slope &&
               a.final_nonlinearity == b.final_nonlinearity && a.propagation == b.propagation;
    }
};

// Uniform weights in +-min(1, sqrt(6 / (d_in + d_out))), drawn row-major layer by layer.
inline GcnModel init_model(const std::vector<std::size_t>& layer_dims, double leaky_slope, std::uint64_t seed,
                           bool final_nonlinearity = false, Propagation propagation = Propagation::row_normalized) {
    GcnModel m;
    m.layer_dims = layer_dims;
    m.leaky_slope = leaky_slope;
    m.final_nonlinearity = final_nonlinearity;
    m.propagation = propagation;
    detail::require(layer_dims.size() >= 2, "GCN needs at least one layer");
    detail::require(layer_dims.front() == 1 && layer_dims.back() == 1, "GCN layer_dims must start and end with 1");
    SplitMix64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(layer_dims[l]);
        const auto cols = static_cast<Eigen::Index>(layer_dims[l + 1]);
        const double bound = std::min(1.0, std::sqrt(6.0 / static_cast<double>(layer_dims[l] + layer_dims[l + 1])));
        Matrix w(rows, cols);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
    }
    m.validate();
    return m;
}

struct GcnCache {
    std::size_t batch = 0;
    std::size_t nodes = 0;
    std::vector<Matrix> inputs;      // H^{l-1} for l = 1..L
    std::vector<Matrix> aggregated;  // A H^{l-1}
    std::vector<Matrix> preact;      // A H^{l-1} W^l
};

struct GcnForwardResult {
    Matrix refined;  // batch x N
    GcnCache cache;
};

struct GcnGradients {
    std::vector<Matrix> d_weights;
    Matrix d_input;  // batch x N
};

namespace detail {

inline Matrix leaky(const Matrix& z, double slope) {
    return z.array().max(0.0) + slope * z.array().min(0.0);
}

// Subgradient at 0 takes the positive branch.
inline Matrix leaky_grad(const Matrix& z, double slope) {
    return (z.array() >= 0.0).select(Matrix::Ones(z.rows(), z.cols()), Matrix::Constant(z.rows(), z.cols(), slope));
}

// out block b = A * in block b
inline Matrix propagate(const Matrix& a, const Matrix& in, std::size_t batch, std::size_t nodes) {
    const auto n = static_cast<Eigen::Index>(nodes);
    Matrix out(in.rows(), in.cols());
    for (std::size_t b = 0; b < batch; ++b) {
        const auto off = static_cast<Eigen::Index>(b) * n;
        out.middleRows(off, n).noalias() = a * in.middleRows(off, n);
    }
    return out;
}

}  // namespace detail

// The matrix each layer multiplies by. Rows summing to zero cannot occur for
// conditional-probability matrices (the diagonal is always 1) and are left as is.
inline Matrix propagation_matrix(const CondProbMatrix& a, Propagation p) {
    if (p == Propagation::raw) return a.probs;
    Matrix out = a.probs;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double s = out.row(i).sum();
        if (s > 0.0) out.row(i) /= s;
    }
    return out;
}

inline GcnForwardResult gcn_forward(const GcnModel& model, const CondProbMatrix& a, const Matrix& h0) {
    const auto nodes = a.n_classes();
    if (h0.cols() != static_cast<Eigen::Index>(nodes) || a.probs.cols() != a.probs.rows())
        throw validation_error("gcn_forward: input has " + std::to_string(h0.cols()) + " classes, prior has " +
                               std::to_string(nodes));
    detail::require(model.weights.size() + 1 == model.layer_dims.size() && !model.weights.empty(),
                    "gcn_forward: malformed model");
    const Matrix op = propagation_matrix(a, model.propagation);
    GcnForwardResult r;
    r.cache.batch = static_cast<std::size_t>(h0.rows());
    r.cache.nodes = nodes;

    // Row-major batch x N reshapes to (batch * N) x 1 without reordering.
    Matrix h = Eigen::Map<const Eigen::VectorXd>(h0.data(), h0.size());
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
        Matrix agg = detail::propagate(op, h, r.cache.batch, nodes);
        Matrix z = agg * model.weights[l];
        if (!z.allFinite()) throw numeric_error("non-finite pre-activation in GCN layer " + std::to_string(l + 1));
        r.cache.inputs.push_back(std::move(h));
        h = model.activates(l) ? detail::leaky(z, model.leaky_slope) : z;
        r.cache.aggregated.push_back(std::move(agg));
        r.cache.preact.push_back(std::move(z));
    }
    Matrix update = Eigen::Map<const Matrix>(h.data(), h0.rows(), h0.cols());
    r.refined = h0 + update;
    if (!r.refined.allFinite()) throw numeric_error("non-finite refined logits");
    return r;
}

inline GcnGradients gcn_backward(const GcnModel& model, const CondProbMatrix& a, const GcnCache& cache,
                                 const Matrix& grad_refined) {
    const auto layers = model.n_layers();
    if (cache.preact.size() != layers || cache.nodes != a.n_classes() ||
        grad_refined.rows() != static_cast<Eigen::Index>(cache.batch) ||
        grad_refined.cols() != static_cast<Eigen::Index>(cache.nodes))
        throw validation_error("gcn_backward: cache does not match model, prior or gradient shape");

    const Matrix a_t = propagation_matrix(a, model.propagation).transpose();
    GcnGradients g;
    g.d_weights.resize(layers);
    Matrix dh = Eigen::Map<const Eigen::VectorXd>(grad_refined.data(), grad_refined.size());
    for (std::size_t l = layers; l-- > 0;) {
        Matrix dz = model.activates(l) ? Matrix(dh.array() * detail::leaky_grad(cache.preact[l], model.leaky_slope).array())
                                       : dh;
        g.d_weights[l].noalias() = cache.aggregated[l].transpose() * dz;
        Matrix dagg = dz * model.weights[l].transpose();
        dh = detail::propagate(a_t, dagg, cache.batch, cache.nodes);
    }
    g.d_input = grad_refined + Eigen::Map<const Matrix>(dh.data(), grad_refined.rows(), grad_refined.cols());
    for (std::size_t l = 0; l < layers; ++l)
        if (!g.d_weights[l].allFinite())
            throw numeric_error("non-finite gradient for GCN weight " + std::to_string(l + 1));
    return g;
}

// ---------------------------------------------------------------------------
// Model file
//
//   coprior-gcn 1
//   layer_dims <d_0> <d_1> ... <d_L>
//   leaky_slope <real>
//   final_nonlinearity <0|1>
//   propagation <row_normalized|raw>
//   weights <rows> <cols>        (repeated L times, followed by `rows` lines
//   <v_11> <v_12> ... <v_1cols>   of `cols` space-separated reals)
//   ...
//
// Reals use the shortest decimal form that round-trips exactly.

inline constexpr const char* kModelMagic = "coprior-gcn";
inline constexpr int kModelVersion = 1;

inline void write_model(std::ostream& out, const GcnModel& m) {
    m.validate();
    out << kModelMagic << ' ' << kModelVersion << '\n';
    out << "layer_dims";
    for (auto d : m.layer_dims) out << ' ' << d;
    out << '\n';
    out << "leaky_slope " << detail::format_double(m.leaky_slope) << '\n';
    out << "final_nonlinearity " << (m.final_nonlinearity ? 1 : 0) << '\n';
    out << "propagation " << to_string(m.propagation) << '\n';
    for (const auto& w : m.weights) {
        out << "weights " << w.rows() << ' ' << w.cols() << '\n';
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                if (j) out << ' ';
                out << detail::format_double(w(i, j));
            }
            out << '\n';
        }
    }
}

inline GcnModel read_model(std::istream& in) {
    auto fail = [](std::size_t line, const std::string& msg) -> validation_error {
        return validation_error("model file line " + std::to_string(line) + ": " + msg);
    };
    std::string line;
    std::size_t number = 0;
    auto next_line = [&]() -> std::istringstream {
        if (!std::getline(in, line)) throw fail(number + 1, "unexpected end of file");
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return std::istringstream(line);
    };
    auto expect_key = [&](std::istringstream& s, const std::string& key) {
        std::string k;
        s >> k;
        if (k != key) throw fail(number, "expected '" + key + "'");
    };
    auto read_real = [&](std::istringstream& s) {
        std::string tok;
        double v = 0.0;
        if (!(s >> tok) || !detail::parse_double(tok, v) || !std::isfinite(v)) throw fail(number, "bad number");
        return v;
    };
    auto expect_end = [&](std::istringstream& s) {
        std::string extra;
        if (s >> extra) throw fail(number, "trailing content '" + extra + "'");
    };

    GcnModel m;
    {
        auto s = next_line();
        expect_key(s, kModelMagic);
        int version = 0;
        if (!(s >> version) || version != kModelVersion) throw fail(number, "unsupported model version");
        expect_end(s);
    }
    {
        auto s = next_line();
        expect_key(s, "layer_dims");
        std::size_t d = 0;
        while (s >> d) m.layer_dims.push_back(d);
        if (!s.eof()) throw fail(number, "bad layer_dims");
        if (m.layer_dims.size() < 2) throw fail(number, "layer_dims needs at least two entries");
    }
    {
        auto s = next_line();
        expect_key(s, "leaky_slope");
        m.leaky_slope = read_real(s);
        expect_end(s);
    }
    {
        auto s = next_line();
        expect_key(s, "final_nonlinearity");
        int flag = -1;
        if (!(s >> flag) || (flag != 0 && flag != 1)) throw fail(number, "final_nonlinearity must be 0 or 1");
        m.final_nonlinearity = flag == 1;
        expect_end(s);
    }
    {
        auto s = next_line();
        expect_key(s, "propagation");
        std::string p;
        s >> p;
        try {
            m.propagation = parse_propagation(p);
        } catch (const validation_error&) {
            throw fail(number, "unknown propagation '" + p + "'");
        }
        expect_end(s);
    }
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
        auto s = next_line();
        expect_key(s, "weights");
        Eigen::Index rows = 0, cols = 0;
        if (!(s >> rows >> cols)) throw fail(number, "bad weights header");
        expect_end(s);
        if (rows != static_cast<Eigen::Index>(m.layer_dims[l]) || cols != static_cast<Eigen::Index>(m.layer_dims[l + 1]))
            throw fail(number, "weights shape does not match layer_dims");
        Matrix w(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            auto row = next_line();
            for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = read_real(row);
            expect_end(row);
        }
        m.weights.push_back(std::move(w));
    }
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line != "\r") throw fail(number, "trailing content after last weight matrix");
    }
    m.validate();
    return m;
}

inline void save_model(const std::string& path, const GcnModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write '" + path + "'");
    write_model(out, m);
    if (!out) throw validation_error("write failed for '" + path + "'");
}

inline GcnModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    return read_model(in);
}

}  // namespace coprior
