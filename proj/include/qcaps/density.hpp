#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcaps/complex_matrix.hpp"
#include "qcaps/eig.hpp"
#include "qcaps/errors.hpp"

namespace qcaps {

// Qubit convention throughout the library: qubit 0 is the most significant
// bit of the basis-state index, so tensor_product(op_on_qubit0, rest)
// matches index arithmetic directly.

struct PureState {
    std::size_t dim = 0;
    std::vector<cplx> amplitudes;

    PureState() = default;
    PureState(std::size_t d, std::vector<cplx> amps) : dim(d), amplitudes(std::move(amps)) {
        if (amplitudes.size() != dim) throw argument_error("PureState: amplitude count != dim");
        double n2 = 0.0;
        for (const cplx& z : amplitudes) n2 += std::norm(z);
        if (std::abs(n2 - 1.0) > 1e-12) throw argument_error("PureState: squared norm not 1");
    }

    static PureState basis(std::size_t dim, std::size_t index) {
        std::vector<cplx> a(dim);
        a[index] = 1.0;
        return PureState(dim, std::move(a));
    }

    std::size_t num_qubits() const { return log2_exact(dim); }
};

class DensityMatrix {
  public:
    DensityMatrix() = default;

    // Checks Hermiticity and unit trace. Small numeric drift (above 1e-12,
    // below 1e-10) is repaired by symmetrization; larger drift is an error.
    static DensityMatrix from_matrix(ComplexMatrix m) {
        if (m.rows != m.cols) throw argument_error("DensityMatrix: not square");
        if (!is_power_of_two(m.rows)) throw argument_error("DensityMatrix: dim not power of 2");
        const double drift = hermiticity_drift(m);
        if (drift > 1e-10)
            throw numeric_error("DensityMatrix: Hermiticity drift above 1e-10");
        if (drift > 1e-12) {
            for (std::size_t i = 0; i < m.rows; ++i)
                for (std::size_t j = i; j < m.cols; ++j) {
                    const cplx avg = 0.5 * (m(i, j) + std::conj(m(j, i)));
                    m(i, j) = avg;
                    m(j, i) = std::conj(avg);
                }
        }
        const cplx tr = trace(m);
        if (std::abs(tr - 1.0) > 1e-10)
            throw numeric_error("DensityMatrix: trace differs from 1 by more than 1e-10");
        DensityMatrix rho;
        rho.matrix_ = std::move(m);
        return rho;
    }

    static DensityMatrix pure(const PureState& psi) {
        ComplexMatrix m(psi.dim, psi.dim);
        for (std::size_t i = 0; i < psi.dim; ++i)
            for (std::size_t j = 0; j < psi.dim; ++j)
                m(i, j) = psi.amplitudes[i] * std::conj(psi.amplitudes[j]);
        return from_matrix(std::move(m));
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        ComplexMatrix m(dim, dim);
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0 / static_cast<double>(dim);
        return from_matrix(std::move(m));
    }

    std::size_t dim() const { return matrix_.rows; }
    std::size_t num_qubits() const { return log2_exact(dim()); }
    const ComplexMatrix& matrix() const { return matrix_; }

    // Full invariant check including positivity; used by tests and property
    // suites, not on hot paths.
    double min_eigenvalue() const {
        return hermitian_eigensystem(matrix_).eigenvalues.front();
    }

  private:
    ComplexMatrix matrix_;
};

struct Observable {
    ComplexMatrix matrix;

    explicit Observable(ComplexMatrix m) : matrix(std::move(m)) {
        if (matrix.rows != matrix.cols) throw argument_error("Observable: not square");
        if (hermiticity_drift(matrix) > 1e-10)
            throw contract_error("Observable: not Hermitian within 1e-10");
    }
};

// Pauli matrices.
inline ComplexMatrix pauli_i() { return ComplexMatrix::identity(2); }
inline ComplexMatrix pauli_x() {
    ComplexMatrix m(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}
inline ComplexMatrix pauli_y() {
    ComplexMatrix m(2, 2);
    m(0, 1) = cplx(0.0, -1.0);
    m(1, 0) = cplx(0.0, 1.0);
    return m;
}
inline ComplexMatrix pauli_z() {
    ComplexMatrix m(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

// Reduced state on `keep` (ascending qubit indices, order preserved).
inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   const std::vector<std::size_t>& keep) {
    if (keep.empty()) throw argument_error("partial_trace: empty keep set");
    const std::size_t n = rho.num_qubits();
    std::vector<std::size_t> keep_sorted = keep;
    std::sort(keep_sorted.begin(), keep_sorted.end());
    if (std::adjacent_find(keep_sorted.begin(), keep_sorted.end()) != keep_sorted.end())
        throw argument_error("partial_trace: duplicate qubit index");
    if (keep_sorted.back() >= n) throw argument_error("partial_trace: qubit index out of range");

    std::vector<std::size_t> traced;
    for (std::size_t q = 0; q < n; ++q)
        if (!std::binary_search(keep_sorted.begin(), keep_sorted.end(), q)) traced.push_back(q);

    const std::size_t nk = keep_sorted.size();
    const std::size_t nt = traced.size();
    const std::size_t dk = std::size_t{1} << nk;
    const std::size_t dt = std::size_t{1} << nt;

    // Bit position of qubit q in an n-qubit index (qubit 0 = MSB).
    auto bit = [n](std::size_t q) { return n - 1 - q; };

    ComplexMatrix out(dk, dk);
    const ComplexMatrix& m = rho.matrix();
    for (std::size_t a = 0; a < dk; ++a) {
        for (std::size_t b = 0; b < dk; ++b) {
            std::size_t base_r = 0, base_c = 0;
            for (std::size_t i = 0; i < nk; ++i) {
                if ((a >> (nk - 1 - i)) & 1) base_r |= std::size_t{1} << bit(keep_sorted[i]);
                if ((b >> (nk - 1 - i)) & 1) base_c |= std::size_t{1} << bit(keep_sorted[i]);
            }
            cplx sum = 0.0;
            for (std::size_t t = 0; t < dt; ++t) {
                std::size_t tmask = 0;
                for (std::size_t i = 0; i < nt; ++i)
                    if ((t >> (nt - 1 - i)) & 1) tmask |= std::size_t{1} << bit(traced[i]);
                sum += m(base_r | tmask, base_c | tmask);
            }
            out(a, b) = sum;
        }
    }
    return DensityMatrix::from_matrix(std::move(out));
}

// rho^k. Repeated multiplication for small k, spectral route above.
inline ComplexMatrix matrix_power(const DensityMatrix& rho, std::size_t k) {
    if (k == 0) throw argument_error("matrix_power: k must be >= 1");
    if (k <= 4) {
        ComplexMatrix acc = rho.matrix();
        for (std::size_t i = 1; i < k; ++i) acc = matmul(acc, rho.matrix());
        return acc;
    }
    const EigenSystem es = hermitian_eigensystem(rho.matrix());
    const std::size_t d = rho.dim();
    ComplexMatrix out(d, d);
    for (std::size_t e = 0; e < d; ++e) {
        const double lk = std::pow(es.eigenvalues[e], static_cast<double>(k));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                out(i, j) += lk * es.eigenvectors(i, e) * std::conj(es.eigenvectors(j, e));
    }
    return out;
}

// k-th moment overlap Tr(rho^k chi^k), clamped to [0, 1].
inline double overlap_k(const DensityMatrix& rho, const DensityMatrix& chi, std::size_t k) {
    if (rho.dim() != chi.dim()) throw argument_error("overlap_k: dimension mismatch");
    const cplx t = trace_of_product(matrix_power(rho, k), matrix_power(chi, k));
    if (std::abs(t.imag()) > 1e-10)
        throw numeric_error("overlap_k: imaginary residue above 1e-10");
    const double v = t.real();
    if (v < -1e-10 || v > 1.0 + 1e-10)
        throw numeric_error("overlap_k: value outside [0,1] tolerance band");
    return std::clamp(v, 0.0, 1.0);
}

// k-th purity Tr(chi^{2k}).
inline double purity_k(const DensityMatrix& chi, std::size_t k) {
    return overlap_k(chi, chi, k);
}

inline double expectation(const DensityMatrix& rho, const Observable& obs) {
    if (rho.dim() != obs.matrix.rows) throw argument_error("expectation: dimension mismatch");
    const cplx t = trace_of_product(rho.matrix(), obs.matrix);
    if (std::abs(t.imag()) > 1e-10)
        throw numeric_error("expectation: imaginary residue above 1e-10");
    return t.real();
}

// <Z_q> without building the operator.
inline double expectation_z(const DensityMatrix& rho, std::size_t qubit) {
    const std::size_t n = rho.num_qubits();
    if (qubit >= n) throw argument_error("expectation_z: qubit out of range");
    const std::size_t mask = std::size_t{1} << (n - 1 - qubit);
    double v = 0.0;
    for (std::size_t i = 0; i < rho.dim(); ++i)
        v += ((i & mask) ? -1.0 : 1.0) * rho.matrix()(i, i).real();
    return v;
}

inline PureState amplitude_encode(const std::vector<double>& pixels) {
    if (!is_power_of_two(pixels.size()))
        throw argument_error("amplitude_encode: length not a power of 2");
    double n2 = 0.0;
    for (double p : pixels) {
        if (!std::isfinite(p)) throw argument_error("amplitude_encode: non-finite entry");
        n2 += p * p;
    }
    if (n2 == 0.0) throw data_error("amplitude_encode: zero vector");
    const double inv = 1.0 / std::sqrt(n2);
    std::vector<cplx> amps(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) amps[i] = pixels[i] * inv;
    return PureState(pixels.size(), std::move(amps));
}

// Reduced density matrix of a pure state on a keep set, computed by direct
// contraction over the traced indices. Much cheaper than forming the full
// projector first; this is the hot path of the model forward pass.
inline DensityMatrix reduced_from_pure(const PureState& psi,
                                       const std::vector<std::size_t>& keep) {
    if (keep.empty()) throw argument_error("reduced_from_pure: empty keep set");
    const std::size_t n = psi.num_qubits();
    std::vector<std::size_t> keep_sorted = keep;
    std::sort(keep_sorted.begin(), keep_sorted.end());
    if (keep_sorted.back() >= n)
        throw argument_error("reduced_from_pure: qubit index out of range");
    std::vector<std::size_t> traced;
    for (std::size_t q = 0; q < n; ++q)
        if (!std::binary_search(keep_sorted.begin(), keep_sorted.end(), q)) traced.push_back(q);

    const std::size_t nk = keep_sorted.size();
    const std::size_t nt = traced.size();
    const std::size_t dk = std::size_t{1} << nk;
    const std::size_t dt = std::size_t{1} << nt;
    auto bit = [n](std::size_t q) { return n - 1 - q; };

    // Precompute full-index contributions for kept / traced sub-indices.
    std::vector<std::size_t> keep_mask(dk, 0), traced_mask(dt, 0);
    for (std::size_t a = 0; a < dk; ++a)
        for (std::size_t i = 0; i < nk; ++i)
            if ((a >> (nk - 1 - i)) & 1) keep_mask[a] |= std::size_t{1} << bit(keep_sorted[i]);
    for (std::size_t t = 0; t < dt; ++t)
        for (std::size_t i = 0; i < nt; ++i)
            if ((t >> (nt - 1 - i)) & 1) traced_mask[t] |= std::size_t{1} << bit(traced[i]);

    ComplexMatrix out(dk, dk);
    for (std::size_t a = 0; a < dk; ++a) {
        for (std::size_t b = a; b < dk; ++b) {
            cplx sum = 0.0;
            for (std::size_t t = 0; t < dt; ++t)
                sum += psi.amplitudes[keep_mask[a] | traced_mask[t]] *
                       std::conj(psi.amplitudes[keep_mask[b] | traced_mask[t]]);
            out(a, b) = sum;
            out(b, a) = std::conj(sum);
        }
    }
    return DensityMatrix::from_matrix(std::move(out));
}

}  // namespace qcaps
