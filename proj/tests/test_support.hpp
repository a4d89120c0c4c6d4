#pragma once
// Independent reference computations used by the tests. Nothing here calls
// into the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coprior/matrix.hpp"

namespace coprior::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("coprior_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Pairwise double loop over samples and class pairs.
inline std::vector<std::vector<std::int64_t>> brute_cooccurrence(const std::vector<std::vector<int>>& y) {
    const std::size_t n = y.empty() ? 0 : y[0].size();
    std::vector<std::vector<std::int64_t>> c(n, std::vector<std::int64_t>(n, 0));
    for (const auto& row : y)
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t k = 0; k < n; ++k)
                if (row[m] == 1 && row[k] == 1) ++c[m][k];
    return c;
}

// Area under the precision-recall step function: sort with the documented tie
// rule, enumerate every prefix, and integrate precision over recall increments.
inline double brute_average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order;
    std::vector<bool> taken(n, false);
    for (std::size_t r = 0; r < n; ++r) {  // selection sort: highest score, lowest index first
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i] && (best == n || scores[i] > scores[best])) best = i;
        taken[best] = true;
        order.push_back(best);
    }
    double positives = 0.0;
    for (int l : labels) positives += l;
    double area = 0.0, prev_recall = 0.0;
    for (std::size_t len = 1; len <= n; ++len) {
        double tp = 0.0;
        for (std::size_t r = 0; r < len; ++r) tp += labels[order[r]];
        const double recall = tp / positives;
        const double precision = tp / static_cast<double>(len);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

inline double bce(double z, int y) {
    const double p = 1.0 / (1.0 + std::exp(-z));
    return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Central difference of f along every entry of x, restoring x afterwards.
inline Matrix central_difference(Matrix& x, const std::function<double()>& f, double step) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = x.data()[i];
        x.data()[i] = orig + step;
        const double up = f();
        x.data()[i] = orig - step;
        const double down = f();
        x.data()[i] = orig;
        g.data()[i] = (up - down) / (2.0 * step);
    }
    return g;
}

inline bool close_rel(double analytic, double numeric, double rel, double abs_floor) {
    const double diff = std::abs(analytic - numeric);
    return diff <= abs_floor || diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
    return m;
}

}  // namespace coprior::testing
