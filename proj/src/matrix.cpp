#include "drx/matrix.hpp"

#include "drx/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace drx {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("from_rows: ragged row lengths");
        std::copy(row.begin(), row.end(), m.row(i).begin());
        ++i;
    }
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        std::ostringstream msg;
        msg << "matmul: shape mismatch " << a.rows() << "x" << a.cols() << " * " << b.rows()
            << "x" << b.cols();
        throw ShapeError(msg.str());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        std::ostringstream msg;
        msg << "matvec: matrix has " << a.cols() << " cols, vector has " << x.size();
        throw ShapeError(msg.str());
    }
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Matrix pairwise_sq_dists(const Matrix& x) {
    if (x.rows() == 0) throw ShapeError("pairwise_sq_dists: empty matrix");
    Matrix out(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            const double d = squared_distance(x.row(i), x.row(j));
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return out;
}

namespace {

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) s += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(s);
}

} // namespace

EigenDecomposition sym_eig(const Matrix& a, double tol) {
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n) {
        std::ostringstream msg;
        msg << "sym_eig: expected square matrix, got " << a.rows() << "x" << a.cols();
        throw ShapeError(msg.str());
    }
    double max_abs = 0.0;
    for (double v : a.data()) max_abs = std::max(max_abs, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(max_abs, 1.0)) {
                std::ostringstream msg;
                msg << "sym_eig: asymmetric input at (" << i << "," << j << ")";
                throw ShapeError(msg.str());
            }
        }
    }

    Matrix work = a;
    Matrix vecs = Matrix::identity(n);
    const double frob = frobenius_norm(a);
    // Floor at n*eps: cyclic Jacobi cannot push the off-diagonal mass much
    // below machine precision, and a tighter request must not read as
    // non-convergence.
    const double floor_rel = static_cast<double>(n) * std::numeric_limits<double>::epsilon();
    const double threshold = std::max(std::min(1e-12, tol), floor_rel) * std::max(frob, 1e-300);

    constexpr int kMaxSweeps = 100;
    bool converged = frob == 0.0 || n == 1;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p < n - 1; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = work(p, q);
                if (apq == 0.0) continue;
                // Rotation angle zeroing work(p,q); numerically stable form.
                const double theta = (work(q, q) - work(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = work(k, p);
                    const double wkq = work(k, q);
                    work(k, p) = c * wkp - s * wkq;
                    work(k, q) = s * wkp + c * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = work(p, k);
                    const double wqk = work(q, k);
                    work(p, k) = c * wpk - s * wqk;
                    work(q, k) = s * wpk + c * wqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vecs(k, p);
                    const double vkq = vecs(k, q);
                    vecs(k, p) = c * vkp - s * vkq;
                    vecs(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(work) <= threshold;
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "sym_eig: no convergence after " << kMaxSweeps
            << " sweeps, off-diagonal residual " << off_diagonal_norm(work);
        throw NumericError(msg.str());
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return work(i, i) > work(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = work(src, src);
        std::size_t peak = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (std::abs(vecs(k, src)) > std::abs(vecs(peak, src))) peak = k;
        }
        const double sign = vecs(peak, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = sign * vecs(k, src);
    }
    return out;
}

} // namespace drx
