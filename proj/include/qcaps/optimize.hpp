#pragma once

#include <cmath>
#include <functional>
#include <thread>
#include <vector>

#include "qcaps/errors.hpp"

namespace qcaps {

// Chunked parallel loop; fn receives [begin, end) index ranges. Results must
// be written to disjoint slots so the schedule cannot affect output.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        fn(0, n);
        return;
    }
    const std::size_t workers = std::min(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(fn, begin, end);
    }
    for (std::thread& t : pool) t.join();
}

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;

    void reset(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
};

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Standard Adam with bias correction.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamConfig& cfg = {}) {
    if (params.size() != grads.size()) throw argument_error("adam_step: size mismatch");
    if (state.m.size() != params.size()) state.reset(params.size());
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

// Central-difference gradient of an arbitrary loss over a flat parameter
// vector. The loss functor must be pure in the parameters.
inline std::vector<double> grad_finite_diff(
    const std::vector<double>& params,
    const std::function<double(const std::vector<double>&)>& loss, double h = 1e-3,
    std::size_t threads = 1) {
    if (h <= 0.0) throw argument_error("grad_finite_diff: step must be positive");
    std::vector<double> grads(params.size(), 0.0);
    parallel_for(params.size(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> probe = params;
        for (std::size_t i = begin; i < end; ++i) {
            probe[i] = params[i] + h;
            const double up = loss(probe);
            probe[i] = params[i] - h;
            const double down = loss(probe);
            probe[i] = params[i];
            if (!std::isfinite(up) || !std::isfinite(down))
                throw numeric_error("grad_finite_diff: non-finite loss at parameter index " +
                                    std::to_string(i));
            grads[i] = (up - down) / (2.0 * h);
        }
    });
    return grads;
}

}  // namespace qcaps
