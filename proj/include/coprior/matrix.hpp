#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace coprior {

// Row-major dense storage throughout: row = sample (or node), column = class (or feature).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace coprior
