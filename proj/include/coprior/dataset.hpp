#pragma once
// Label/logit containers, CSV ingestion, splitting, batching and the
// synthetic co-occurrence generator.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coprior/error.hpp"
#include "coprior/matrix.hpp"
#include "coprior/rng.hpp"

namespace coprior {

// Binary ground truth, samples x classes.
class LabelMatrix {
public:
    LabelMatrix() = default;

    LabelMatrix(IntMatrix values, std::vector<std::string> sample_ids, std::vector<std::string> class_names)
        : values_(std::move(values)), sample_ids_(std::move(sample_ids)), class_names_(std::move(class_names)) {
        detail::require(values_.rows() >= 1, "no samples");
        detail::require(values_.cols() >= 2, "need at least 2 classes");
        detail::require(static_cast<std::size_t>(values_.rows()) == sample_ids_.size(),
                        "sample_id count does not match label rows");
        detail::require(static_cast<std::size_t>(values_.cols()) == class_names_.size(),
                        "class name count does not match label columns");
        for (Eigen::Index i = 0; i < values_.size(); ++i) {
            const auto v = values_.data()[i];
            detail::require(v == 0 || v == 1, "label values must be 0 or 1");
        }
        std::unordered_set<std::string_view> seen;
        for (const auto& id : sample_ids_)
            detail::require(seen.insert(id).second, "duplicate sample_id '" + id + "'");
    }

    // Builds a matrix with generated ids ("s0", "s1", ...) and class names ("c0", ...).
    static LabelMatrix with_default_names(IntMatrix values) {
        std::vector<std::string> ids, names;
        for (Eigen::Index i = 0; i < values.rows(); ++i) ids.push_back("s" + std::to_string(i));
        for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("c" + std::to_string(j));
        return LabelMatrix(std::move(values), std::move(ids), std::move(names));
    }

    std::size_t n_samples() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t n_classes() const { return static_cast<std::size_t>(values_.cols()); }
    const IntMatrix& values() const { return values_; }
    const std::vector<std::string>& sample_ids() const { return sample_ids_; }
    const std::vector<std::string>& class_names() const { return class_names_; }

    LabelMatrix select_rows(const std::vector<std::size_t>& rows) const {
        IntMatrix v(static_cast<Eigen::Index>(rows.size()), values_.cols());
        std::vector<std::string> ids;
        ids.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            v.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
            ids.push_back(sample_ids_[rows[r]]);
        }
        return LabelMatrix(std::move(v), std::move(ids), class_names_);
    }

    friend bool operator==(const LabelMatrix& a, const LabelMatrix& b) {
        return a.values_ == b.values_ && a.sample_ids_ == b.sample_ids_ && a.class_names_ == b.class_names_;
    }

private:
    IntMatrix values_;
    std::vector<std::string> sample_ids_;
    std::vector<std::string> class_names_;
};

// Real-valued initial logits aligned row-for-row with a LabelMatrix.
class LogitMatrix {
public:
    LogitMatrix() = default;

    explicit LogitMatrix(Matrix values) : values_(std::move(values)) {
        if (!values_.allFinite()) throw validation_error("non-finite logit");
    }

    LogitMatrix(Matrix values, const LabelMatrix& labels) : LogitMatrix(std::move(values)) {
        detail::require(values_.rows() == labels.values().rows() && values_.cols() == labels.values().cols(),
                        "logit shape does not match labels");
    }

    std::size_t n_samples() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t n_classes() const { return static_cast<std::size_t>(values_.cols()); }
    const Matrix& values() const { return values_; }

    LogitMatrix select_rows(const std::vector<std::size_t>& rows) const {
        Matrix v(static_cast<Eigen::Index>(rows.size()), values_.cols());
        for (std::size_t r = 0; r < rows.size(); ++r)
            v.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
        return LogitMatrix(std::move(v));
    }

    friend bool operator==(const LogitMatrix& a, const LogitMatrix& b) { return a.values_ == b.values_; }

private:
    Matrix values_;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.emplace_back(line.substr(start));
            break;
        }
        cells.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

struct CsvLine {
    std::size_t number;  // 1-based line number in the file
    std::vector<std::string> cells;
};

// Reads a comma-separated file, accepting LF or CRLF and a leading UTF-8 BOM.
// Blank lines are skipped.
inline std::vector<CsvLine> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::vector<CsvLine> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (number == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (line.empty()) continue;
        lines.push_back({number, split_csv_line(line)});
    }
    return lines;
}

inline std::string at_line(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line) + ": ";
}

struct Table {
    std::vector<std::string> class_names;
    std::vector<std::string> sample_ids;
    std::vector<std::size_t> line_numbers;
    std::vector<std::vector<std::string>> rows;  // data cells, without the id column
};

inline Table read_table(const std::string& path) {
    auto lines = read_csv(path);
    if (lines.empty()) throw validation_error(path + ": empty file, missing header");
    const auto& header = lines.front();
    if (header.cells.empty() || header.cells.front() != "sample_id")
        throw validation_error(at_line(path, header.number) + "malformed header: first column must be 'sample_id'");
    if (header.cells.size() < 3)
        throw validation_error(at_line(path, header.number) + "malformed header: need at least 2 class columns");
    Table t;
    t.class_names.assign(header.cells.begin() + 1, header.cells.end());
    for (const auto& name : t.class_names)
        if (name.empty()) throw validation_error(at_line(path, header.number) + "malformed header: empty class name");
    std::unordered_set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto& l = lines[i];
        if (l.cells.size() != header.cells.size())
            throw validation_error(at_line(path, l.number) + "ragged row: expected " +
                                   std::to_string(header.cells.size()) + " cells, got " +
                                   std::to_string(l.cells.size()));
        if (l.cells.front().empty()) throw validation_error(at_line(path, l.number) + "empty sample_id");
        if (!seen.insert(l.cells.front()).second)
            throw validation_error(at_line(path, l.number) + "duplicate sample_id '" + l.cells.front() + "'");
        t.sample_ids.push_back(l.cells.front());
        t.line_numbers.push_back(l.number);
        t.rows.emplace_back(l.cells.begin() + 1, l.cells.end());
    }
    if (t.rows.empty()) throw validation_error(path + ": no samples");
    return t;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && first != last;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

inline LabelMatrix load_labels(const std::string& path) {
    auto t = detail::read_table(path);
    IntMatrix v(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.class_names.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
            const auto& cell = t.rows[r][c];
            if (cell != "0" && cell != "1")
                throw validation_error(detail::at_line(path, t.line_numbers[r]) + "label must be 0 or 1, got '" +
                                       cell + "'");
            v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cell == "1" ? 1 : 0;
        }
    }
    return LabelMatrix(std::move(v), std::move(t.sample_ids), std::move(t.class_names));
}

// Score table with its own ids, for files not yet paired with labels.
struct ScoreTable {
    std::vector<std::string> sample_ids;
    std::vector<std::string> class_names;
    Matrix values;
};

inline ScoreTable load_score_table(const std::string& path) {
    auto t = detail::read_table(path);
    Matrix v(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.class_names.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
            double x = 0.0;
            if (!detail::parse_double(t.rows[r][c], x))
                throw validation_error(detail::at_line(path, t.line_numbers[r]) + "not a number: '" + t.rows[r][c] +
                                       "'");
            if (!std::isfinite(x))
                throw validation_error(detail::at_line(path, t.line_numbers[r]) + "non-finite logit");
            v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
        }
    }
    return {std::move(t.sample_ids), std::move(t.class_names), std::move(v)};
}

inline LogitMatrix align_scores(const ScoreTable& table, const LabelMatrix& labels) {
    if (table.values.cols() != static_cast<Eigen::Index>(labels.n_classes()) ||
        table.sample_ids.size() != labels.n_samples())
        throw validation_error("shape mismatch: logits are " + std::to_string(table.values.rows()) + "x" +
                               std::to_string(table.values.cols()) + ", labels are " +
                               std::to_string(labels.n_samples()) + "x" + std::to_string(labels.n_classes()));
    for (std::size_t r = 0; r < table.sample_ids.size(); ++r)
        if (table.sample_ids[r] != labels.sample_ids()[r])
            throw validation_error("sample_id mismatch at row " + std::to_string(r + 1) + ": '" +
                                   table.sample_ids[r] + "' vs '" + labels.sample_ids()[r] + "'");
    return LogitMatrix(table.values, labels);
}

inline LogitMatrix load_logits(const std::string& path, const LabelMatrix& labels) {
    return align_scores(load_score_table(path), labels);
}

inline void write_labels(const std::string& path, const LabelMatrix& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write '" + path + "'");
    out << "sample_id";
    for (const auto& n : labels.class_names()) out << ',' << n;
    out << '\n';
    const auto& v = labels.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        out << labels.sample_ids()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < v.cols(); ++j) out << ',' << v(i, j);
        out << '\n';
    }
    if (!out) throw validation_error("write failed for '" + path + "'");
}

// Writes shortest round-trip decimal representations.
inline void write_logits(const std::string& path, const Matrix& values, const std::vector<std::string>& sample_ids,
                         const std::vector<std::string>& class_names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write '" + path + "'");
    out << "sample_id";
    for (const auto& n : class_names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out << sample_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << detail::format_double(values(i, j));
        out << '\n';
    }
    if (!out) throw validation_error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting and batching

struct DataPart {
    LabelMatrix labels;
    LogitMatrix logits;
};

// Seeded permutation; the first floor(n * fraction) permuted samples form the
// training part, the rest the test part.
inline std::pair<DataPart, DataPart> split(const LabelMatrix& labels, const LogitMatrix& logits, double fraction,
                                           std::uint64_t seed) {
    detail::require(fraction > 0.0 && fraction < 1.0, "split fraction must be in (0, 1)");
    detail::require(labels.n_samples() == logits.n_samples(), "labels and logits differ in sample count");
    const std::size_t n = labels.n_samples();
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
    if (n_train == 0 || n_train >= n)
        throw validation_error("split fraction " + detail::format_double(fraction) + " on " + std::to_string(n) +
                               " samples leaves an empty part");
    SplitMix64 rng(seed);
    const auto perm = random_permutation(n, rng);
    std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return {DataPart{labels.select_rows(train_idx), logits.select_rows(train_idx)},
            DataPart{labels.select_rows(test_idx), logits.select_rows(test_idx)}};
}

// Shuffled mini-batches keyed by (seed, epoch). The last batch may be short.
inline std::vector<std::vector<std::size_t>> batches(std::size_t n_samples, std::size_t batch_size,
                                                     std::uint64_t seed, std::uint64_t epoch) {
    detail::require(batch_size >= 1, "batch_size must be >= 1");
    SplitMix64 rng(derive_seed(seed, "batches", epoch));
    const auto perm = random_permutation(n_samples, rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n_samples; start += batch_size) {
        const std::size_t stop = std::min(n_samples, start + batch_size);
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
    std::size_t n_classes = 20;
    std::size_t n_samples = 1000;
    std::vector<std::vector<std::size_t>> clusters;
    double within_cluster_prob = 0.9;
    // Per-class marginal activation probability. A cluster activates with the
    // mean of its members' values.
    std::vector<double> base_prob;
    std::vector<double> signal_strength;
    double noise_std = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(n_classes >= 2, "synthetic spec: n_classes must be >= 2");
        detail::require(n_samples >= 1, "synthetic spec: n_samples must be >= 1");
        detail::require(within_cluster_prob >= 0.0 && within_cluster_prob <= 1.0,
                        "synthetic spec: within_cluster_prob must be in [0, 1]");
        detail::require(base_prob.size() == n_classes, "synthetic spec: base_prob needs one entry per class");
        detail::require(signal_strength.size() == n_classes,
                        "synthetic spec: signal_strength needs one entry per class");
        for (double p : base_prob)
            detail::require(p >= 0.0 && p <= 1.0, "synthetic spec: base_prob must be in [0, 1]");
        for (double s : signal_strength)
            detail::require(std::isfinite(s) && s >= 0.0, "synthetic spec: signal_strength must be >= 0");
        detail::require(std::isfinite(noise_std) && noise_std > 0.0, "synthetic spec: noise_std must be > 0");
        std::vector<bool> used(n_classes, false);
        for (const auto& c : clusters) {
            detail::require(!c.empty(), "synthetic spec: empty cluster");
            for (auto j : c) {
                detail::require(j < n_classes, "synthetic spec: cluster member out of range");
                detail::require(!used[j], "synthetic spec: clusters must be disjoint");
                used[j] = true;
            }
        }
    }
};

// Fills per-class vectors with constants.
inline SyntheticSpec make_synthetic_spec(std::size_t n_classes, std::size_t n_samples,
                                         std::vector<std::vector<std::size_t>> clusters, double within_cluster_prob,
                                         double base_prob, double signal_strength, double noise_std,
                                         std::uint64_t seed) {
    SyntheticSpec s;
    s.n_classes = n_classes;
    s.n_samples = n_samples;
    s.clusters = std::move(clusters);
    s.within_cluster_prob = within_cluster_prob;
    s.base_prob.assign(n_classes, base_prob);
    s.signal_strength.assign(n_classes, signal_strength);
    s.noise_std = noise_std;
    s.seed = seed;
    return s;
}

// Per sample, in order: each cluster (in list order) activates with its
// activation probability; an active cluster turns on one uniformly chosen
// member and every other member independently with within_cluster_prob.
// Then every non-cluster class activates independently with its base_prob.
// Logits are s_j * (2y - 1) + N(0, noise_std^2), drawn after all labels of the
// sample, class by class.
inline std::pair<LabelMatrix, LogitMatrix> synth_generate(const SyntheticSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n_samples);
    const auto k = static_cast<Eigen::Index>(spec.n_classes);
    std::vector<bool> in_cluster(spec.n_classes, false);
    std::vector<double> cluster_prob;
    for (const auto& c : spec.clusters) {
        double p = 0.0;
        for (auto j : c) {
            in_cluster[j] = true;
            p += spec.base_prob[j];
        }
        cluster_prob.push_back(p / static_cast<double>(c.size()));
    }

    SplitMix64 rng(spec.seed);
    IntMatrix y = IntMatrix::Zero(n, k);
    Matrix logits(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
            const auto& members = spec.clusters[c];
            if (!rng.bernoulli(cluster_prob[c])) continue;
            const auto lead = rng.below(members.size());
            for (std::size_t m = 0; m < members.size(); ++m) {
                if (m == lead || rng.bernoulli(spec.within_cluster_prob))
                    y(i, static_cast<Eigen::Index>(members[m])) = 1;
            }
        }
        for (std::size_t j = 0; j < spec.n_classes; ++j)
            if (!in_cluster[j] && rng.bernoulli(spec.base_prob[j])) y(i, static_cast<Eigen::Index>(j)) = 1;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double sign = y(i, j) == 1 ? 1.0 : -1.0;
            logits(i, j) = spec.signal_strength[static_cast<std::size_t>(j)] * sign + rng.normal(0.0, spec.noise_std);
        }
    }
    auto labels = LabelMatrix::with_default_names(std::move(y));
    LogitMatrix lm(std::move(logits), labels);
    return {std::move(labels), std::move(lm)};
}

}  // namespace coprior
