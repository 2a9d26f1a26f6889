#pragma once

#include <cmath>
#include <vector>

#include "qcaps/density.hpp"
#include "qcaps/rng.hpp"

namespace qcaps {

// Standard complex Gaussian via Box-Muller.
inline cplx gaussian_cplx(Rng& rng) {
    const double u1 = std::max(rng.uniform(), 1e-300);
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return cplx(r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2));
}

// Haar-ish random pure state (normalized Gaussian vector).
inline PureState random_pure_state(Rng& rng, std::size_t dim) {
    std::vector<cplx> amps(dim);
    double n2 = 0.0;
    for (cplx& a : amps) {
        a = gaussian_cplx(rng);
        n2 += std::norm(a);
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (cplx& a : amps) a *= inv;
    return PureState(dim, std::move(amps));
}

// Random mixed state: convex mixture of `rank` random pure states with
// uniform-random weights.
inline DensityMatrix random_density_matrix(Rng& rng, std::size_t dim, std::size_t rank) {
    if (rank == 0) throw argument_error("random_density_matrix: rank must be >= 1");
    std::vector<double> w(rank);
    double z = 0.0;
    for (double& x : w) {
        x = rng.uniform(0.1, 1.0);
        z += x;
    }
    ComplexMatrix acc(dim, dim);
    for (std::size_t r = 0; r < rank; ++r) {
        const PureState psi = random_pure_state(rng, dim);
        const double p = w[r] / z;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                acc(i, j) += p * psi.amplitudes[i] * std::conj(psi.amplitudes[j]);
    }
    return DensityMatrix::from_matrix(std::move(acc));
}

}  // namespace qcaps
