#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qcaps/complex_matrix.hpp"
#include "qcaps/density.hpp"
#include "qcaps/errors.hpp"

namespace qcaps {

enum class ChannelKind { PQC, DQFNN, PostDQFNN };

inline const char* channel_kind_name(ChannelKind k) {
    switch (k) {
        case ChannelKind::PQC: return "pqc";
        case ChannelKind::DQFNN: return "dqfnn";
        case ChannelKind::PostDQFNN: return "post_dqfnn";
    }
    return "?";
}

// Per-qubit ZYZ Euler angles for one circuit layer, flat layout
// (theta_z1, theta_y, theta_z2) per qubit.
struct EulerLayerParams {
    std::vector<double> angles;

    std::size_t qubit_count() const { return angles.size() / 3; }
};

// Parameterized sub-QNN mapping a capsule state to a prediction state.
struct ChannelSpec {
    ChannelKind kind = ChannelKind::PQC;
    std::size_t in_qubits = 0;
    std::size_t out_qubits = 0;
    std::size_t depth = 0;
    std::vector<double> params;

    std::size_t block_qubits() const {
        return kind == ChannelKind::DQFNN ? in_qubits + out_qubits : in_qubits;
    }
    std::size_t expected_param_count() const { return depth * 3 * block_qubits(); }

    void validate() const {
        if (kind == ChannelKind::PQC && in_qubits != out_qubits)
            throw argument_error("ChannelSpec: PQC requires in_qubits == out_qubits");
        if (kind == ChannelKind::PostDQFNN) {
            if (in_qubits % 2 != 0)
                throw argument_error("ChannelSpec: post-DQFNN requires even in_qubits");
            if (out_qubits != in_qubits / 2)
                throw argument_error("ChannelSpec: post-DQFNN requires out_qubits == in_qubits/2");
        }
        if (params.size() != expected_param_count())
            throw argument_error("ChannelSpec: parameter count mismatch");
        for (double p : params)
            if (!std::isfinite(p)) throw argument_error("ChannelSpec: non-finite parameter");
    }
};

inline ComplexMatrix rot_z(double theta) {
    ComplexMatrix m(2, 2);
    m(0, 0) = std::polar(1.0, -theta / 2.0);
    m(1, 1) = std::polar(1.0, theta / 2.0);
    return m;
}

inline ComplexMatrix rot_y(double theta) {
    ComplexMatrix m(2, 2);
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    m(0, 0) = c;
    m(0, 1) = -s;
    m(1, 0) = s;
    m(1, 1) = c;
    return m;
}

// Euler rotation Rz(z2) Ry(y) Rz(z1): z1 acts first.
inline ComplexMatrix euler_rotation(double z1, double y, double z2) {
    return matmul(rot_z(z2), matmul(rot_y(y), rot_z(z1)));
}

namespace detail {

// The CNOT chain (0->1),(1->2),...,(n-2 -> n-1) is a basis permutation:
// bit q+1 flips when bit q is set, applied in ascending q order.
inline std::size_t cnot_chain_image(std::size_t basis, std::size_t n) {
    for (std::size_t q = 0; q + 1 < n; ++q) {
        const std::size_t cbit = (basis >> (n - 1 - q)) & 1;
        if (cbit) basis ^= std::size_t{1} << (n - 2 - q);
    }
    return basis;
}

}  // namespace detail

// One Fig.-style layer: per-qubit Euler rotations followed by the open
// nearest-neighbor CNOT chain.
inline ComplexMatrix build_layer_unitary(std::size_t n_qubits, const EulerLayerParams& layer) {
    if (n_qubits < 1) throw argument_error("build_layer_unitary: need at least 1 qubit");
    if (layer.angles.size() != 3 * n_qubits)
        throw argument_error("build_layer_unitary: angle count != 3 * qubit count");
    ComplexMatrix rot =
        euler_rotation(layer.angles[0], layer.angles[1], layer.angles[2]);
    for (std::size_t q = 1; q < n_qubits; ++q)
        rot = tensor_product(
            rot, euler_rotation(layer.angles[3 * q], layer.angles[3 * q + 1],
                                layer.angles[3 * q + 2]));
    if (n_qubits == 1) return rot;

    // Left-multiplying by the chain permutation is a row reshuffle.
    const std::size_t d = std::size_t{1} << n_qubits;
    ComplexMatrix u(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        const std::size_t dst = detail::cnot_chain_image(r, n_qubits);
        for (std::size_t c = 0; c < d; ++c) u(dst, c) = rot(r, c);
    }
    return u;
}

// Product of `depth` layer unitaries over a flat angle vector; later layers
// are applied on the left.
inline ComplexMatrix build_circuit_unitary(std::size_t n_qubits, std::size_t depth,
                                           std::span<const double> params) {
    const std::size_t per_layer = 3 * n_qubits;
    if (params.size() != depth * per_layer)
        throw argument_error("build_circuit_unitary: parameter count mismatch");
    ComplexMatrix u;
    for (std::size_t l = 0; l < depth; ++l) {
        EulerLayerParams layer;
        layer.angles.assign(params.begin() + static_cast<std::ptrdiff_t>(l * per_layer),
                            params.begin() + static_cast<std::ptrdiff_t>((l + 1) * per_layer));
        ComplexMatrix lu = build_layer_unitary(n_qubits, layer);
        u = l == 0 ? std::move(lu) : matmul(lu, u);
    }
    if (depth == 0) return ComplexMatrix::identity(std::size_t{1} << n_qubits);
    return u;
}

inline ComplexMatrix build_circuit_unitary(const ChannelSpec& spec) {
    spec.validate();
    return build_circuit_unitary(spec.block_qubits(), spec.depth, spec.params);
}

inline DensityMatrix apply_pqc(const ChannelSpec& spec, const DensityMatrix& chi) {
    if (spec.kind != ChannelKind::PQC) throw argument_error("apply_pqc: wrong channel kind");
    spec.validate();
    if (chi.dim() != (std::size_t{1} << spec.in_qubits))
        throw argument_error("apply_pqc: state dimension mismatch");
    const ComplexMatrix u = build_circuit_unitary(spec);
    return DensityMatrix::from_matrix(matmul(u, matmul(chi.matrix(), dagger(u))));
}

// Tr_in[ U (chi (x) |0..0><0..0|_out) U^dag ]. The embedded state is nonzero
// only on columns where the out block reads 0, so only a column slice of U
// enters the result.
inline DensityMatrix apply_dqfnn(const ChannelSpec& spec, const DensityMatrix& chi) {
    if (spec.kind != ChannelKind::DQFNN) throw argument_error("apply_dqfnn: wrong channel kind");
    spec.validate();
    const std::size_t din = std::size_t{1} << spec.in_qubits;
    const std::size_t dout = std::size_t{1} << spec.out_qubits;
    if (chi.dim() != din) throw argument_error("apply_dqfnn: state dimension mismatch");
    const ComplexMatrix u = build_circuit_unitary(spec);
    const std::size_t dtot = din * dout;

    // B = U[:, a*dout] for a in 0..din-1, then T = B chi.
    ComplexMatrix b(dtot, din);
    for (std::size_t r = 0; r < dtot; ++r)
        for (std::size_t a = 0; a < din; ++a) b(r, a) = u(r, a * dout);
    const ComplexMatrix t = matmul(b, chi.matrix());

    ComplexMatrix out(dout, dout);
    for (std::size_t a = 0; a < din; ++a)
        for (std::size_t x = 0; x < dout; ++x)
            for (std::size_t y = 0; y < dout; ++y) {
                cplx sum = 0.0;
                for (std::size_t c = 0; c < din; ++c)
                    sum += t(a * dout + x, c) * std::conj(b(a * dout + y, c));
                out(x, y) += sum;
            }
    return DensityMatrix::from_matrix(std::move(out));
}

// Apply U on the in-block, measure the first half in the computational
// basis, apply the Pauli correction C_m = (x)_i X^{m_i} on the surviving
// half (measured qubit i paired with surviving qubit i), and average over
// outcomes. Deterministic outcome-averaged channel.
inline DensityMatrix apply_post_dqfnn(const ChannelSpec& spec, const DensityMatrix& chi) {
    if (spec.kind != ChannelKind::PostDQFNN)
        throw argument_error("apply_post_dqfnn: wrong channel kind");
    spec.validate();
    const std::size_t din = std::size_t{1} << spec.in_qubits;
    if (chi.dim() != din) throw argument_error("apply_post_dqfnn: state dimension mismatch");
    const ComplexMatrix u = build_circuit_unitary(spec);
    const ComplexMatrix& x = chi.matrix();

    // Embedded inputs (primary (x) |0..0>) populate only a few columns, and
    // only same-measurement-block entries of the evolved state are read, so
    // restrict the evolution to the nonzero column support.
    std::vector<std::size_t> support;
    for (std::size_t c = 0; c < din; ++c)
        for (std::size_t r = 0; r < din; ++r)
            if (x(r, c) != 0.0) {
                support.push_back(c);
                break;
            }

    // t = U chi restricted to supported columns.
    ComplexMatrix t(din, support.size());
    for (std::size_t i = 0; i < din; ++i)
        for (std::size_t s2 = 0; s2 < support.size(); ++s2) {
            cplx sum = 0.0;
            for (std::size_t s1 : support) sum += u(i, s1) * x(s1, support[s2]);
            t(i, s2) = sum;
        }

    const std::size_t dh = std::size_t{1} << spec.out_qubits;
    ComplexMatrix out(dh, dh);
    for (std::size_t m = 0; m < dh; ++m)
        for (std::size_t r = 0; r < dh; ++r)
            for (std::size_t rp = 0; rp < dh; ++rp) {
                const std::size_t i = m * dh + (r ^ m), j = m * dh + (rp ^ m);
                cplx sum = 0.0;
                for (std::size_t s2 = 0; s2 < support.size(); ++s2)
                    sum += t(i, s2) * std::conj(u(j, support[s2]));
                out(r, rp) += sum;
            }
    return DensityMatrix::from_matrix(std::move(out));
}

inline DensityMatrix apply_channel(const ChannelSpec& spec, const DensityMatrix& chi) {
    switch (spec.kind) {
        case ChannelKind::PQC: return apply_pqc(spec, chi);
        case ChannelKind::DQFNN: return apply_dqfnn(spec, chi);
        case ChannelKind::PostDQFNN: return apply_post_dqfnn(spec, chi);
    }
    throw argument_error("apply_channel: unknown kind");
}

// chi (x) |0..0><0..0| on `extra` appended qubits.
inline DensityMatrix embed_with_fresh_qubits(const DensityMatrix& chi, std::size_t extra) {
    if (extra == 0) return chi;
    const std::size_t de = std::size_t{1} << extra;
    ComplexMatrix out(chi.dim() * de, chi.dim() * de);
    for (std::size_t i = 0; i < chi.dim(); ++i)
        for (std::size_t j = 0; j < chi.dim(); ++j)
            out(i * de, j * de) = chi.matrix()(i, j);
    return DensityMatrix::from_matrix(std::move(out));
}

// --- statevector fast path (used by the model's preprocessing stage) ---

namespace detail {

inline void apply_single_qubit_gate(std::vector<cplx>& psi, std::size_t n,
                                    std::size_t qubit, const ComplexMatrix& g) {
    const std::size_t stride = std::size_t{1} << (n - 1 - qubit);
    const std::size_t dim = std::size_t{1} << n;
    for (std::size_t base = 0; base < dim; base += 2 * stride)
        for (std::size_t off = 0; off < stride; ++off) {
            const std::size_t i0 = base + off, i1 = i0 + stride;
            const cplx a0 = psi[i0], a1 = psi[i1];
            psi[i0] = g(0, 0) * a0 + g(0, 1) * a1;
            psi[i1] = g(1, 0) * a0 + g(1, 1) * a1;
        }
}

inline void apply_cnot_chain(std::vector<cplx>& psi, std::size_t n) {
    // In-place basis permutation matching cnot_chain_image.
    const std::size_t dim = std::size_t{1} << n;
    std::vector<cplx> tmp(dim);
    for (std::size_t b = 0; b < dim; ++b) tmp[cnot_chain_image(b, n)] = psi[b];
    psi = std::move(tmp);
}

}  // namespace detail

// Applies the same circuit as build_circuit_unitary directly to a state
// vector; equality of the two paths is covered by tests.
inline PureState apply_circuit_to_state(std::size_t n_qubits, std::size_t depth,
                                        std::span<const double> params,
                                        const PureState& input) {
    const std::size_t per_layer = 3 * n_qubits;
    if (params.size() != depth * per_layer)
        throw argument_error("apply_circuit_to_state: parameter count mismatch");
    if (input.dim != (std::size_t{1} << n_qubits))
        throw argument_error("apply_circuit_to_state: state dimension mismatch");
    std::vector<cplx> psi = input.amplitudes;
    for (std::size_t l = 0; l < depth; ++l) {
        const double* p = params.data() + l * per_layer;
        for (std::size_t q = 0; q < n_qubits; ++q)
            detail::apply_single_qubit_gate(
                psi, n_qubits, q, euler_rotation(p[3 * q], p[3 * q + 1], p[3 * q + 2]));
        if (n_qubits > 1) detail::apply_cnot_chain(psi, n_qubits);
    }
    return PureState(input.dim, std::move(psi));
}

}  // namespace qcaps
