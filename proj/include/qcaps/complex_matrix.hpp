#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qcaps/errors.hpp"

namespace qcaps {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 14;
inline constexpr std::size_t kMaxDim = std::size_t{1} << kMaxQubits;

// Dense row-major complex matrix. Plain value type; all quantum objects in
// the library are built on top of it.
struct ComplexMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<cplx> data;

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cplx& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool is_finite() const {
        for (const cplx& z : data)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }
};

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols != b.rows) throw argument_error("matmul: inner dimensions differ");
    ComplexMatrix c(a.rows, b.cols);
    const std::size_t n = a.rows, k = a.cols, m = b.cols;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx* arow = &a.data[i * k];
        cplx* crow = &c.data[i * m];
        for (std::size_t p = 0; p < k; ++p) {
            const cplx aip = arow[p];
            if (aip == 0.0) continue;
            const cplx* brow = &b.data[p * m];
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

inline ComplexMatrix dagger(const ComplexMatrix& a) {
    ComplexMatrix c(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) c(j, i) = std::conj(a(i, j));
    return c;
}

inline ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw argument_error("add: shape mismatch");
    ComplexMatrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] + b.data[i];
    return c;
}

inline ComplexMatrix sub(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw argument_error("sub: shape mismatch");
    ComplexMatrix c(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) c.data[i] = a.data[i] - b.data[i];
    return c;
}

inline ComplexMatrix scale(const ComplexMatrix& a, cplx s) {
    ComplexMatrix c = a;
    for (cplx& z : c.data) z *= s;
    return c;
}

inline cplx trace(const ComplexMatrix& a) {
    if (a.rows != a.cols) throw argument_error("trace: matrix not square");
    cplx t = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) t += a(i, i);
    return t;
}

// Tr(A B) without forming the product.
inline cplx trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols != b.rows || a.rows != b.cols)
        throw argument_error("trace_of_product: shape mismatch");
    cplx t = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t += a(i, j) * b(j, i);
    return t;
}

inline double max_abs(const ComplexMatrix& a) {
    double m = 0.0;
    for (const cplx& z : a.data) m = std::max(m, std::abs(z));
    return m;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw argument_error("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

// Largest |A - A^dagger| entry; 0 for exactly Hermitian matrices.
inline double hermiticity_drift(const ComplexMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i; j < a.cols; ++j)
            m = std::max(m, std::abs(a(i, j) - std::conj(a(j, i))));
    return m;
}

// Kronecker product; (A x B)[i*rb+k][j*cb+l] = A[i][j] * B[k][l].
inline ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (!a.is_finite() || !b.is_finite())
        throw argument_error("tensor_product: non-finite input");
    if (a.rows * b.rows > kMaxDim || a.cols * b.cols > kMaxDim)
        throw size_error("tensor_product: result exceeds max dimension");
    ComplexMatrix c(a.rows * b.rows, a.cols * b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) {
            const cplx aij = a(i, j);
            if (aij == 0.0) continue;
            for (std::size_t k = 0; k < b.rows; ++k)
                for (std::size_t l = 0; l < b.cols; ++l)
                    c(i * b.rows + k, j * b.cols + l) = aij * b(k, l);
        }
    return c;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t log2_exact(std::size_t n) {
    if (!is_power_of_two(n)) throw argument_error("dimension is not a power of 2");
    std::size_t k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

}  // namespace qcaps
