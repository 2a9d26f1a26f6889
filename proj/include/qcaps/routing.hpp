#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcaps/complex_matrix.hpp"
#include "qcaps/density.hpp"
#include "qcaps/errors.hpp"

namespace qcaps {

// M x J routing coefficients plus the overlaps from the last iteration.
// Column-stochastic over i: sum_i q[i][j] == 1 per j.
struct RoutingState {
    std::size_t m = 0;
    std::size_t j = 0;
    std::vector<double> q;         // row-major M x J
    std::vector<double> overlaps;  // row-major M x J, last-computed Omega values
    std::size_t iteration = 0;
    double max_dq = 0.0;  // max |delta q| over the final iteration

    double& q_at(std::size_t i, std::size_t col) { return q[i * j + col]; }
    double q_at(std::size_t i, std::size_t col) const { return q[i * j + col]; }
};

// M x J grid of prediction states rho_{j|i}; dims uniform per column.
struct PredictionBundle {
    std::size_t m = 0;
    std::size_t j = 0;
    std::vector<DensityMatrix> states;  // row-major M x J

    const DensityMatrix& at(std::size_t i, std::size_t col) const { return states[i * j + col]; }
    DensityMatrix& at(std::size_t i, std::size_t col) { return states[i * j + col]; }
};

// squash(s) = (|s|^2 / (1 + |s|^2)) * s / |s|, with squash(0) = 0.
inline std::vector<double> squash(const std::vector<double>& s) {
    double n2 = 0.0;
    for (double x : s) n2 += x * x;
    if (n2 == 0.0) return std::vector<double>(s.size(), 0.0);
    const double factor = n2 / (1.0 + n2) / std::sqrt(n2);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = factor * s[i];
    return out;
}

// Stable softmax over one row of routing digits.
inline std::vector<double> softmax_over_j(const std::vector<double>& b) {
    if (b.empty()) throw argument_error("softmax_over_j: empty row");
    const double mx = *std::max_element(b.begin(), b.end());
    std::vector<double> out(b.size());
    double z = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        out[i] = std::exp(b[i] - mx);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

struct ClassicalRoutingResult {
    std::vector<std::vector<double>> capsules;  // J capsule vectors v_j
    std::vector<std::vector<double>> r;         // M x J final coefficients
};

// Dynamic routing over classical prediction vectors u[i][j] (each a real
// vector of uniform dimension per column): b = 0; per iteration
// r = softmax_j(b); s_j = sum_i r_ij u_{j|i}; v_j = squash(s_j);
// b_ij += u_{j|i} . v_j.
inline ClassicalRoutingResult route_classical(
    const std::vector<std::vector<std::vector<double>>>& u, std::size_t iterations) {
    if (iterations < 1) throw argument_error("route_classical: iterations must be >= 1");
    const std::size_t m = u.size();
    if (m == 0) throw argument_error("route_classical: no predictions");
    const std::size_t j = u[0].size();
    for (const auto& row : u) {
        if (row.size() != j) throw argument_error("route_classical: ragged prediction grid");
        for (std::size_t col = 0; col < j; ++col)
            if (row[col].size() != u[0][col].size())
                throw argument_error("route_classical: ragged prediction dimensions");
    }

    std::vector<std::vector<double>> b(m, std::vector<double>(j, 0.0));
    std::vector<std::vector<double>> r(m, std::vector<double>(j, 0.0));
    std::vector<std::vector<double>> v(j);
    for (std::size_t e = 0; e < iterations; ++e) {
        for (std::size_t i = 0; i < m; ++i) r[i] = softmax_over_j(b[i]);
        for (std::size_t col = 0; col < j; ++col) {
            std::vector<double> s(u[0][col].size(), 0.0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t d = 0; d < s.size(); ++d) s[d] += r[i][col] * u[i][col][d];
            v[col] = squash(s);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t col = 0; col < j; ++col) {
                double dot = 0.0;
                for (std::size_t d = 0; d < v[col].size(); ++d) dot += u[i][col][d] * v[col][d];
                b[i][col] += dot;
            }
    }
    return {std::move(v), std::move(r)};
}

// omega_i = (1 + Omega_i) / sum_i' (1 + Omega_i') for one column.
inline std::vector<double> overlap_weights(const std::vector<double>& omegas) {
    double a = 0.0;
    for (double o : omegas) a += 1.0 + o;
    std::vector<double> w(omegas.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = (1.0 + omegas[i]) / a;
    return w;
}

// q_i = Omega_i^2 / sum Omega^2; uniform fallback when every overlap is
// numerically zero (the update is 0/0 there).
inline std::vector<double> update_routing(const std::vector<double>& omegas) {
    double z = 0.0;
    for (double o : omegas) z += o * o;
    const std::size_t m = omegas.size();
    std::vector<double> q(m);
    bool all_tiny = true;
    for (double o : omegas)
        if (o > 1e-14) all_tiny = false;
    if (all_tiny) {
        std::fill(q.begin(), q.end(), 1.0 / static_cast<double>(m));
        return q;
    }
    for (std::size_t i = 0; i < m; ++i) q[i] = omegas[i] * omegas[i] / z;
    return q;
}

// chi_j = sum_i q_i rho_{j|i}.
inline DensityMatrix mix_capsule(const std::vector<DensityMatrix>& column,
                                 const std::vector<double>& q) {
    if (column.empty() || column.size() != q.size())
        throw argument_error("mix_capsule: column/coefficient size mismatch");
    const std::size_t d = column[0].dim();
    ComplexMatrix acc(d, d);
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (column[i].dim() != d) throw argument_error("mix_capsule: dimension mismatch");
        const ComplexMatrix& m = column[i].matrix();
        for (std::size_t e = 0; e < acc.data.size(); ++e) acc.data[e] += q[i] * m.data[e];
    }
    return DensityMatrix::from_matrix(std::move(acc));
}

struct QuantumRoutingResult {
    std::vector<DensityMatrix> capsules;  // J states
    RoutingState state;
};

// Quantum dynamic routing: q uniform; repeat e times
// { chi_j = mix; q = Omega^2-normalized }; final chi_j from converged q.
inline QuantumRoutingResult route_quantum(const PredictionBundle& predictions, std::size_t k,
                                          std::size_t iterations) {
    if (iterations < 1) throw argument_error("route_quantum: iterations must be >= 1");
    const std::size_t m = predictions.m, j = predictions.j;
    if (m == 0 || j == 0) throw argument_error("route_quantum: empty bundle");
    if (predictions.states.size() != m * j)
        throw argument_error("route_quantum: bundle size mismatch");

    QuantumRoutingResult result;
    result.state.m = m;
    result.state.j = j;
    result.state.q.assign(m * j, 0.0);
    result.state.overlaps.assign(m * j, 0.0);
    result.state.iteration = iterations;
    result.capsules.reserve(j);

    double max_dq = 0.0;
    for (std::size_t col = 0; col < j; ++col) {
        std::vector<DensityMatrix> column;
        column.reserve(m);
        std::vector<ComplexMatrix> powers;
        powers.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            column.push_back(predictions.at(i, col));
            powers.push_back(matrix_power(column.back(), k));
        }
        std::vector<double> q(m, 1.0 / static_cast<double>(m));
        std::vector<double> omegas(m, 0.0);
        double col_dq = 0.0;
        for (std::size_t e = 0; e < iterations; ++e) {
            const DensityMatrix chi = mix_capsule(column, q);
            const ComplexMatrix chi_k = matrix_power(chi, k);
            for (std::size_t i = 0; i < m; ++i) {
                const double v = trace_of_product(powers[i], chi_k).real();
                omegas[i] = std::clamp(v, 0.0, 1.0);
            }
            const std::vector<double> q_new = update_routing(omegas);
            col_dq = 0.0;
            for (std::size_t i = 0; i < m; ++i) col_dq = std::max(col_dq, std::abs(q_new[i] - q[i]));
            q = q_new;
        }
        max_dq = std::max(max_dq, col_dq);
        result.capsules.push_back(mix_capsule(column, q));
        for (std::size_t i = 0; i < m; ++i) {
            result.state.q_at(i, col) = q[i];
            result.state.overlaps[i * j + col] = omegas[i];
        }
    }
    result.state.max_dq = max_dq;
    return result;
}

}  // namespace qcaps
