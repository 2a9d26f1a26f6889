#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qcaps/complex_matrix.hpp"
#include "qcaps/density.hpp"
#include "qcaps/errors.hpp"
#include "qcaps/routing.hpp"

namespace qcaps {

// Block-diagonal qRAM state sum_i p_i |i><i| (x) rho_i^{(x)k}. The address
// register is a dimension-M qudit; each bus entry is the k-fold tensor power
// of one prediction state.
struct QRamState {
    std::size_t m = 0;
    std::size_t k = 0;
    std::size_t subsystem_dim = 0;
    std::vector<double> address_probs;
    std::vector<ComplexMatrix> bus_states;  // M entries, each d^k x d^k

    std::size_t bus_dim() const {
        std::size_t d = 1;
        for (std::size_t i = 0; i < k; ++i) d *= subsystem_dim;
        return d;
    }

    static QRamState from_column(const std::vector<DensityMatrix>& column, std::size_t k,
                                 const std::vector<double>& probs) {
        if (column.empty()) throw argument_error("QRamState: empty column");
        if (probs.size() != column.size())
            throw argument_error("QRamState: probability count mismatch");
        double total = 0.0;
        for (double p : probs) total += p;
        if (std::abs(total - 1.0) > 1e-10)
            throw argument_error("QRamState: address probabilities must sum to 1");
        QRamState s;
        s.m = column.size();
        s.k = k;
        s.subsystem_dim = column[0].dim();
        s.address_probs = probs;
        for (const DensityMatrix& rho : column) {
            if (rho.dim() != s.subsystem_dim)
                throw argument_error("QRamState: mixed subsystem dimensions");
            ComplexMatrix power = rho.matrix();
            for (std::size_t c = 1; c < k; ++c) power = tensor_product(power, rho.matrix());
            s.bus_states.push_back(std::move(power));
        }
        return s;
    }

    static QRamState uniform_from_column(const std::vector<DensityMatrix>& column,
                                         std::size_t k) {
        return from_column(
            column, k,
            std::vector<double>(column.size(), 1.0 / static_cast<double>(column.size())));
    }

    // Materialized sum_i p_i |i><i| (x) rho_i^{(x)k}; block diagonal over i.
    ComplexMatrix materialize() const {
        const std::size_t db = bus_dim();
        ComplexMatrix g(m * db, m * db);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t r = 0; r < db; ++r)
                for (std::size_t c = 0; c < db; ++c)
                    g(i * db + r, i * db + c) = address_probs[i] * bus_states[i](r, c);
        return g;
    }
};

// Permutation unitary cyclically shifting 2k subsystem slots of dimension d:
// slot 1 receives the old slot 2k, slot s receives the old slot s-1.
inline ComplexMatrix build_2k_swap(std::size_t subsystem_dim, std::size_t k) {
    const std::size_t slots = 2 * k;
    std::size_t dim = 1;
    for (std::size_t s = 0; s < slots; ++s) {
        if (dim > kMaxDim / subsystem_dim) throw size_error("build_2k_swap: dimension overflow");
        dim *= subsystem_dim;
    }
    ComplexMatrix u(dim, dim);
    std::vector<std::size_t> digits(slots);
    for (std::size_t c = 0; c < dim; ++c) {
        std::size_t x = c;
        for (std::size_t s = slots; s-- > 0;) {
            digits[s] = x % subsystem_dim;
            x /= subsystem_dim;
        }
        std::size_t r = digits[slots - 1];
        for (std::size_t s = 0; s + 1 < slots; ++s) r = r * subsystem_dim + digits[s];
        u(r, c) = 1.0;
    }
    return u;
}

struct SwapTestResult {
    double p0 = 0.0;
    std::vector<double> omega;
};

// SWAP-test circuit of the routing weight extraction: materialize
// ancilla (x) index (x) capsule (x) bus, apply H, controlled cyclic
// 2k-shift, H, then read the ancilla-0 populations per address value.
// Capsule register holds chi^{(x)k}, bus register holds the qRAM data.
inline SwapTestResult swap_test_overlap_circuit(const QRamState& sigma_in,
                                                const ComplexMatrix& chi_k, std::size_t k) {
    if (k != sigma_in.k) throw argument_error("swap_test_overlap_circuit: k mismatch");
    const std::size_t db = sigma_in.bus_dim();
    if (chi_k.rows != db || chi_k.cols != db)
        throw argument_error("swap_test_overlap_circuit: capsule register dimension mismatch");
    const std::size_t m = sigma_in.m;
    const std::size_t dsys = db * db;      // capsule (x) bus
    const std::size_t dblk = m * dsys;     // index (x) capsule (x) bus
    const std::size_t dim = 2 * dblk;      // ancilla on top

    // Cyclic permutation over the 2k slots: capsule copies first, bus after.
    std::vector<std::size_t> perm(dsys);
    {
        const std::size_t d = sigma_in.subsystem_dim;
        const std::size_t slots = 2 * k;
        std::vector<std::size_t> digits(slots);
        for (std::size_t c = 0; c < dsys; ++c) {
            std::size_t x = c;
            for (std::size_t s = slots; s-- > 0;) {
                digits[s] = x % d;
                x /= d;
            }
            std::size_t r = digits[slots - 1];
            for (std::size_t s = 0; s + 1 < slots; ++s) r = r * d + digits[s];
            perm[c] = r;
        }
    }

    // Initial global state: |0><0|_anc (x) sum_i p_i |i><i| (x) chi_k (x) rho_i^k.
    ComplexMatrix g(dim, dim);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t rc = 0; rc < db; ++rc)
            for (std::size_t cc = 0; cc < db; ++cc) {
                const cplx cap = sigma_in.address_probs[i] * chi_k(rc, cc);
                if (cap == 0.0) continue;
                for (std::size_t rb = 0; rb < db; ++rb)
                    for (std::size_t cb = 0; cb < db; ++cb)
                        g(i * dsys + rc * db + rb, i * dsys + cc * db + cb) =
                            cap * sigma_in.bus_states[i](rb, cb);
            }

    auto hadamard_ancilla = [dblk](ComplexMatrix& rho) {
        // rho has ancilla as the leading 2-dim factor; Hadamard mixes the
        // four D x D blocks.
        for (std::size_t r = 0; r < dblk; ++r)
            for (std::size_t c = 0; c < dblk; ++c) {
                const cplx a = rho(r, c), b = rho(r, dblk + c);
                const cplx d = rho(dblk + r, c), e = rho(dblk + r, dblk + c);
                rho(r, c) = 0.5 * (a + b + d + e);
                rho(r, dblk + c) = 0.5 * (a - b + d - e);
                rho(dblk + r, c) = 0.5 * (a + b - d - e);
                rho(dblk + r, dblk + c) = 0.5 * (a - b - d + e);
            }
    };
    auto controlled_shift = [&](ComplexMatrix& rho) {
        // W acts on the capsule (x) bus factor when the ancilla reads 1; the
        // index register is untouched. Row/column relabeling per block.
        ComplexMatrix out(dim, dim);
        auto mapped = [&](std::size_t idx, bool anc) {
            if (!anc) return idx;
            const std::size_t i = idx / dsys, y = idx % dsys;
            return i * dsys + perm[y];
        };
        for (std::size_t ar = 0; ar < 2; ++ar)
            for (std::size_t ac = 0; ac < 2; ++ac)
                for (std::size_t r = 0; r < dblk; ++r)
                    for (std::size_t c = 0; c < dblk; ++c)
                        out(ar * dblk + mapped(r, ar == 1), ac * dblk + mapped(c, ac == 1)) =
                            rho(ar * dblk + r, ac * dblk + c);
        rho = std::move(out);
    };

    hadamard_ancilla(g);
    controlled_shift(g);
    hadamard_ancilla(g);

    SwapTestResult result;
    result.omega.assign(m, 0.0);
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double pop = 0.0;
        for (std::size_t y = 0; y < dsys; ++y) pop += g(i * dsys + y, i * dsys + y).real();
        result.omega[i] = pop;
        p0 += pop;
    }
    for (std::size_t r = dblk; r < dim; ++r) p1 += g(r, r).real();
    if (std::abs(p0 + p1 - 1.0) > 1e-12)
        throw numeric_error("swap_test_overlap_circuit: probabilities do not sum to 1");
    if (p0 <= 0.0) throw numeric_error("swap_test_overlap_circuit: empty |0> subspace");
    for (double& w : result.omega) w /= p0;
    result.p0 = p0;
    return result;
}

// Exact block-diagonal unitary U_j = exp(-i t sum_i qtilde_i |i><i| (x) 1 (x) X)
// on index (x) bus (x) ancilla.
inline ComplexMatrix build_assignment_unitary(const std::vector<double>& qtilde,
                                              std::size_t bus_dim, double t) {
    const std::size_t m = qtilde.size();
    const std::size_t dim = m * bus_dim * 2;
    ComplexMatrix u(dim, dim);
    for (std::size_t i = 0; i < m; ++i) {
        const double c = std::cos(qtilde[i] * t);
        const cplx s = cplx(0.0, -std::sin(qtilde[i] * t));
        for (std::size_t r = 0; r < bus_dim; ++r) {
            const std::size_t base = (i * bus_dim + r) * 2;
            u(base, base) = c;
            u(base, base + 1) = s;
            u(base + 1, base) = s;
            u(base + 1, base + 1) = c;
        }
    }
    return u;
}

// Apply U_j to sigma_in (x) |0><0| and post-select the ancilla on |1>;
// returns the post-selected address distribution.
inline std::vector<double> routing_assignment_channel(const QRamState& sigma_in,
                                                      const std::vector<double>& qtilde,
                                                      double t) {
    if (t <= 0.0) throw argument_error("routing_assignment_channel: t must be positive");
    if (qtilde.size() != sigma_in.m)
        throw argument_error("routing_assignment_channel: qtilde size mismatch");
    for (double q : qtilde)
        if (q < 0.0 || q > 1.0)
            throw argument_error("routing_assignment_channel: qtilde entries must be in [0,1]");
    const std::size_t db = sigma_in.bus_dim();
    const std::size_t m = sigma_in.m;
    const std::size_t dim = m * db * 2;

    ComplexMatrix g(dim, dim);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t r = 0; r < db; ++r)
            for (std::size_t c = 0; c < db; ++c)
                g((i * db + r) * 2, (i * db + c) * 2) =
                    sigma_in.address_probs[i] * sigma_in.bus_states[i](r, c);

    const ComplexMatrix u = build_assignment_unitary(qtilde, db, t);
    const ComplexMatrix evolved = matmul(u, matmul(g, dagger(u)));

    std::vector<double> pops(m, 0.0);
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t r = 0; r < db; ++r) {
            p0 += evolved((i * db + r) * 2, (i * db + r) * 2).real();
            const double v = evolved((i * db + r) * 2 + 1, (i * db + r) * 2 + 1).real();
            pops[i] += v;
            p1 += v;
        }
    if (std::abs(p0 + p1 - 1.0) > 1e-12)
        throw numeric_error("routing_assignment_channel: probabilities do not sum to 1");
    if (p1 <= 1e-300)
        throw numeric_error("routing_assignment_channel: post-selection impossible (all qtilde 0)");
    for (double& p : pops) p /= p1;
    return pops;
}

struct SmallTEntry {
    double t = 0.0;
    double max_rel_deviation = 0.0;
};

struct SmallTReport {
    std::vector<SmallTEntry> entries;
    std::vector<double> halving_ratios;  // deviation(t) / deviation(t/2) pairs
};

// Compares the circuit-extracted q at each t against the analytic limit
// qtilde^2 / sum qtilde^2. Deviation should shrink as O(t^2).
inline SmallTReport verify_small_t_limit(const std::vector<double>& qtilde,
                                         const std::vector<double>& t_sequence) {
    const std::size_t m = qtilde.size();
    if (m == 0) throw argument_error("verify_small_t_limit: empty qtilde");
    // A minimal single-qubit uniform qRAM carrier; the assignment circuit is
    // insensitive to the bus contents.
    std::vector<DensityMatrix> column(m, DensityMatrix::maximally_mixed(2));
    const QRamState sigma = QRamState::uniform_from_column(column, 1);

    std::vector<double> analytic(m, 0.0);
    double z = 0.0;
    for (double q : qtilde) z += q * q;
    for (std::size_t i = 0; i < m; ++i) analytic[i] = qtilde[i] * qtilde[i] / z;

    SmallTReport report;
    for (double t : t_sequence) {
        const std::vector<double> q = routing_assignment_channel(sigma, qtilde, t);
        double dev = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (analytic[i] == 0.0) continue;
            dev = std::max(dev, std::abs(q[i] - analytic[i]) / analytic[i]);
        }
        report.entries.push_back({t, dev});
    }
    for (std::size_t i = 0; i + 1 < report.entries.size(); ++i) {
        const double a = report.entries[i].max_rel_deviation;
        const double b = report.entries[i + 1].max_rel_deviation;
        if (b > 0.0) report.halving_ratios.push_back(a / b);
    }
    return report;
}

}  // namespace qcaps
