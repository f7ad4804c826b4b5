#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace drx {

/// Dense row-major matrix of 64-bit floats.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// Column j of `vectors` is the unit eigenvector for `values[j]`.
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
Matrix transpose(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// N x N matrix of squared Euclidean distances between the rows of x.
Matrix pairwise_sq_dists(const Matrix& x);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Converges the off-diagonal Frobenius norm below 1e-12 * ||a||_F
/// (tighter if tol demands it), capped at 100 sweeps. Eigenvector signs
/// are fixed by making each vector's largest-magnitude component
/// non-negative.
EigenDecomposition sym_eig(const Matrix& a, double tol = 1e-9);

} // namespace drx
