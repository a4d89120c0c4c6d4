#pragma once
// File formats for priors and training history.
//
// Square matrices (C.csv, A.csv):
//   class,<name_0>,...,<name_{N-1}>
//   <name_0>,<v_00>,...,<v_0,N-1>
//   ...
// Weights (alpha.csv):
//   class,alpha
//   <name_j>,<alpha_j>
// History (history.csv):
//   epoch,loss,lr,val_mAP          (val_mAP empty when no validation set)

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "coprior/dataset.hpp"
#include "coprior/error.hpp"
#include "coprior/prior.hpp"
#include "coprior/train.hpp"

namespace coprior {

namespace detail {

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write '" + path + "'");
    return out;
}

inline void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw validation_error("write failed for '" + path + "'");
}

template <typename M, typename Fmt>
void write_square(const std::string& path, const M& m, const std::vector<std::string>& names, Fmt fmt) {
    require(static_cast<std::size_t>(m.rows()) == names.size() && m.rows() == m.cols(),
            "matrix does not match class names");
    auto out = open_for_write(path);
    out << "class";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << fmt(m(i, j));
        out << '\n';
    }
    finish_write(out, path);
}

}  // namespace detail

inline void write_cooc_csv(const std::string& path, const CoocMatrix& c, const std::vector<std::string>& names) {
    detail::write_square(path, c.counts, names, [](std::int64_t v) { return std::to_string(v); });
}

inline void write_cond_prob_csv(const std::string& path, const CondProbMatrix& a,
                                const std::vector<std::string>& names) {
    detail::write_square(path, a.probs, names, [](double v) { return detail::format_double(v); });
}

inline void write_alpha_csv(const std::string& path, const ReweightVector& alpha,
                            const std::vector<std::string>& names) {
    detail::require(alpha.n_classes() == names.size(), "alpha vector does not match class names");
    auto out = detail::open_for_write(path);
    out << "class,alpha\n";
    for (std::size_t j = 0; j < names.size(); ++j)
        out << names[j] << ',' << detail::format_double(alpha.alphas(static_cast<Eigen::Index>(j))) << '\n';
    detail::finish_write(out, path);
}

struct NamedCondProb {
    std::vector<std::string> class_names;
    CondProbMatrix matrix;
};

inline NamedCondProb read_cond_prob_csv(const std::string& path) {
    const auto lines = detail::read_csv(path);
    if (lines.empty()) throw validation_error(path + ": empty file");
    const auto& header = lines.front();
    if (header.cells.empty() || header.cells.front() != "class")
        throw validation_error(detail::at_line(path, header.number) + "malformed header: first column must be 'class'");
    NamedCondProb out;
    out.class_names.assign(header.cells.begin() + 1, header.cells.end());
    const auto n = out.class_names.size();
    if (lines.size() != n + 1)
        throw validation_error(path + ": expected " + std::to_string(n) + " rows, got " +
                               std::to_string(lines.size() - 1));
    Matrix probs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& l = lines[r + 1];
        if (l.cells.size() != n + 1)
            throw validation_error(detail::at_line(path, l.number) + "ragged row");
        if (l.cells.front() != out.class_names[r])
            throw validation_error(detail::at_line(path, l.number) + "row name '" + l.cells.front() +
                                   "' does not match column '" + out.class_names[r] + "'");
        for (std::size_t c = 0; c < n; ++c) {
            double v = 0.0;
            if (!detail::parse_double(l.cells[c + 1], v) || !(v >= 0.0 && v <= 1.0))
                throw validation_error(detail::at_line(path, l.number) + "probability must be a number in [0, 1]");
            probs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    out.matrix = CondProbMatrix::from_probs(std::move(probs));
    return out;
}

inline void write_history_csv(const std::string& path, const TrainHistory& h) {
    auto out = detail::open_for_write(path);
    out << "epoch,loss,lr,val_mAP\n";
    for (const auto& e : h.epochs) {
        out << e.epoch << ',' << detail::format_double(e.mean_loss) << ',' << detail::format_double(e.lr) << ',';
        if (e.val_map) out << detail::format_double(*e.val_map);
        out << '\n';
    }
    detail::finish_write(out, path);
}

// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ULL;
        }
    }
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

}  // namespace coprior
