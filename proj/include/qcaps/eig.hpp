#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qcaps/complex_matrix.hpp"
#include "qcaps/errors.hpp"

namespace qcaps {

struct EigenSystem {
    std::vector<double> eigenvalues;  // ascending
    ComplexMatrix eigenvectors;       // column i pairs with eigenvalues[i]
};

namespace detail {

inline double offdiag_norm_sq(const ComplexMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j) s += std::norm(a(i, j));
    return 2.0 * s;
}

// One Jacobi rotation zeroing a(p,q). V2 = diag(1, e^{-i phi}) * G(theta)
// where phi = arg(a_pq); updates A <- V2^dag A V2 and accumulates V <- V V2.
inline void jacobi_rotate(ComplexMatrix& a, ComplexMatrix& v, std::size_t p, std::size_t q) {
    const cplx apq = a(p, q);
    const double r = std::abs(apq);
    if (r == 0.0) return;
    const cplx e = apq / r;  // e^{i phi}
    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double tau = (aqq - app) / (2.0 * r);
    const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                  : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const cplx econj = std::conj(e);

    const std::size_t n = a.rows;
    // Right-multiply columns p,q of A and V by V2.
    for (std::size_t i = 0; i < n; ++i) {
        const cplx aip = a(i, p), aiq = a(i, q) * econj;
        a(i, p) = c * aip - s * aiq;
        a(i, q) = s * aip + c * aiq;
        const cplx vip = v(i, p), viq = v(i, q) * econj;
        v(i, p) = c * vip - s * viq;
        v(i, q) = s * vip + c * viq;
    }
    // Left-multiply rows p,q of A by V2^dag.
    for (std::size_t j = 0; j < n; ++j) {
        const cplx apj = a(p, j), aqj = a(q, j) * e;
        a(p, j) = c * apj - s * aqj;
        a(q, j) = s * apj + c * aqj;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = cplx(a(p, p).real(), 0.0);
    a(q, q) = cplx(a(q, q).real(), 0.0);
}

// Real symmetric variant, used as a fast path for real inputs (spin-chain
// Hamiltonians are real symmetric and dominate the eigensolver workload).
inline void jacobi_rotate_real(std::vector<double>& a, std::vector<double>& v,
                               std::size_t n, std::size_t p, std::size_t q) {
    const double apq = a[p * n + q];
    if (apq == 0.0) return;
    const double tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
    const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                  : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    for (std::size_t i = 0; i < n; ++i) {
        const double aip = a[i * n + p], aiq = a[i * n + q];
        a[i * n + p] = c * aip - s * aiq;
        a[i * n + q] = s * aip + c * aiq;
        const double vip = v[i * n + p], viq = v[i * n + q];
        v[i * n + p] = c * vip - s * viq;
        v[i * n + q] = s * vip + c * viq;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double apj = a[p * n + j], aqj = a[q * n + j];
        a[p * n + j] = c * apj - s * aqj;
        a[q * n + j] = s * apj + c * aqj;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
}

inline EigenSystem jacobi_real_symmetric(const ComplexMatrix& h) {
    const std::size_t n = h.rows;
    std::vector<double> a(n * n), v(n * n, 0.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i * n + i] = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            a[i * n + j] = h(i, j).real();
            scale = std::max(scale, std::abs(a[i * n + j]));
        }
    }
    if (scale == 0.0) scale = 1.0;
    const double tol = 1e-12 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (std::sqrt(2.0 * off) <= tol) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                if (std::abs(a[p * n + q]) > tol / static_cast<double>(n))
                    jacobi_rotate_real(a, v, n, p, q);
    }
    EigenSystem es;
    es.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.eigenvalues[i] = a[i * n + i];
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return es.eigenvalues[x] < es.eigenvalues[y];
    });
    std::vector<double> sorted(n);
    es.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        sorted[c] = es.eigenvalues[order[c]];
        for (std::size_t r = 0; r < n; ++r) es.eigenvectors(r, c) = v[r * n + order[c]];
    }
    es.eigenvalues = std::move(sorted);
    return es;
}

}  // namespace detail

// Cyclic Jacobi diagonalization of a Hermitian matrix. Eigenvalues ascending,
// eigenvectors orthonormal columns.
inline EigenSystem hermitian_eigensystem(const ComplexMatrix& h) {
    if (h.rows != h.cols) throw argument_error("hermitian_eigensystem: not square");
    if (h.rows > 4096) throw size_error("hermitian_eigensystem: dimension above 4096 cap");
    if (hermiticity_drift(h) > 1e-10)
        throw contract_error("hermitian_eigensystem: input not Hermitian within 1e-10");

    double max_imag = 0.0;
    for (const cplx& z : h.data) max_imag = std::max(max_imag, std::abs(z.imag()));
    if (max_imag < 1e-14) return detail::jacobi_real_symmetric(h);

    const std::size_t n = h.rows;
    ComplexMatrix a = h;
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double scale = std::max(max_abs(a), 1e-300);
    const double tol = 1e-12 * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (std::sqrt(detail::offdiag_norm_sq(a)) <= tol) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                if (std::abs(a(p, q)) > tol / static_cast<double>(n))
                    detail::jacobi_rotate(a, v, p, q);
    }

    EigenSystem es;
    es.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) es.eigenvalues[i] = a(i, i).real();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return es.eigenvalues[x] < es.eigenvalues[y];
    });
    std::vector<double> sorted(n);
    es.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        sorted[c] = es.eigenvalues[order[c]];
        for (std::size_t r = 0; r < n; ++r) es.eigenvectors(r, c) = v(r, order[c]);
    }
    es.eigenvalues = std::move(sorted);
    return es;
}

}  // namespace qcaps
