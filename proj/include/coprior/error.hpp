#pragma once

#include <stdexcept>
#include <string>

namespace coprior {

// Bad input: malformed files, violated preconditions, inconsistent shapes.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure during computation (non-finite intermediates, divergence).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw validation_error(msg);
}

}  // namespace detail
}  // namespace coprior
