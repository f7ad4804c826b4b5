#pragma once

#include <stdexcept>
#include <string>

namespace drx {

/// Malformed or inconsistent input data (files, cells, arity mismatches).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Shape contract violations between matrices/vectors.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failures: non-convergence, degenerate kernels.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace drx
