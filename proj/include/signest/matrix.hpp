#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "signest/errors.hpp"

// Small dense linear algebra kernel. Everything here targets desk-scale
// problems (p <= 64 unknowns, a few thousand measurements); simplicity and
// exact reproducibility beat raw speed.

namespace signest {

using Vector = std::vector<double>;

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d)
        : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols)
            throw DimensionMismatch("Matrix: entry count does not match rows*cols");
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool is_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline bool is_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double trace(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(a.rows, a.cols); ++i) s += a(i, i);
    return s;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

/// y = A x
inline Vector matvec(const Matrix& a, const Vector& x) {
    if (x.size() != a.cols) throw DimensionMismatch("matvec: size mismatch");
    Vector y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

/// y = A^T x
inline Vector matvec_t(const Matrix& a, const Vector& x) {
    if (x.size() != a.rows) throw DimensionMismatch("matvec_t: size mismatch");
    Vector y(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) y[j] += a(i, j) * x[i];
    return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw DimensionMismatch("matmul: size mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

/// A diag(d) A^T, accumulated symmetrically. d may be empty for plain A A^T.
inline Matrix weighted_gram(const Matrix& a, const Vector& d = {}) {
    if (!d.empty() && d.size() != a.cols)
        throw DimensionMismatch("weighted_gram: weight size mismatch");
    Matrix g(a.rows, a.rows);
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double w = d.empty() ? 1.0 : d[k];
        for (std::size_t i = 0; i < a.rows; ++i) {
            const double aiw = a(i, k) * w;
            for (std::size_t j = i; j < a.rows; ++j) g(i, j) += aiw * a(j, k);
        }
    }
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

namespace detail {

/// Lower Cholesky factor of a symmetric positive definite matrix.
/// The pivot threshold is relative to trace(A)/n so the test is
/// dimension-aware; failing it signals a numerically singular system.
inline Matrix cholesky(const Matrix& a) {
    if (a.rows != a.cols) throw DimensionMismatch("cholesky: not square");
    const std::size_t n = a.rows;
    const double pivot_tol = 1e-12 * trace(a) / static_cast<double>(n);
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= pivot_tol)
            throw NotPositiveDefinite("cholesky: pivot below threshold");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

inline Vector cholesky_solve(const Matrix& l, const Vector& b) {
    const std::size_t n = l.rows;
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

}  // namespace detail

/// Solve A x = b for symmetric positive definite A.
inline Vector solve_spd(const Matrix& a, const Vector& b) {
    if (b.size() != a.rows) throw DimensionMismatch("solve_spd: size mismatch");
    return detail::cholesky_solve(detail::cholesky(a), b);
}

/// Inverse of a symmetric positive definite matrix (column-wise solve).
inline Matrix spd_inverse(const Matrix& a) {
    const Matrix l = detail::cholesky(a);
    const std::size_t n = a.rows;
    Matrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vector x = detail::cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
        e[j] = 0.0;
    }
    return inv;
}

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Cyclic Jacobi sweeps; the off-diagonal norm threshold is relative to the
/// Frobenius norm of the input and the sweep cap is generous for the matrix
/// sizes this library works with.
inline Vector sym_eigenvalues(const Matrix& a) {
    if (a.rows != a.cols) throw DimensionMismatch("sym_eigenvalues: not square");
    const std::size_t n = a.rows;
    Matrix b = a;
    const double stop = 1e-12 * frobenius_norm(a);
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * b(i, j) * b(i, j);
        if (std::sqrt(off) <= stop) {
            Vector eig(n);
            for (std::size_t i = 0; i < n; ++i) eig[i] = b(i, i);
            std::sort(eig.begin(), eig.end(), std::greater<double>());
            return eig;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = b(p, q);
                if (apq == 0.0) continue;
                const double theta = (b(q, q) - b(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double bkp = b(k, p), bkq = b(k, q);
                    b(k, p) = c * bkp - s * bkq;
                    b(k, q) = s * bkp + c * bkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double bpk = b(p, k), bqk = b(q, k);
                    b(p, k) = c * bpk - s * bqk;
                    b(q, k) = s * bpk + c * bqk;
                }
            }
        }
    }
    throw ConvergenceFailure("sym_eigenvalues: Jacobi sweep cap exceeded");
}

}  // namespace signest
