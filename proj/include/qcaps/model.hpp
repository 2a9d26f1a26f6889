#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qcaps/channels.hpp"
#include "qcaps/density.hpp"
#include "qcaps/errors.hpp"
#include "qcaps/rng.hpp"
#include "qcaps/routing.hpp"

namespace qcaps {

enum class ReadoutMode { Z_MEAN, PURITY };

struct QCapsNetConfig {
    std::size_t total_qubits = 9;
    std::size_t preprocess_depth = 5;
    std::size_t primary_capsules = 3;   // M
    std::size_t qubits_per_primary = 3;
    std::size_t digit_capsules = 2;     // J
    std::size_t qubits_per_digit = 3;
    ChannelKind channel_kind = ChannelKind::PQC;
    std::size_t channel_depth = 1;
    std::size_t k = 3;
    std::size_t routing_iters = 3;
    ReadoutMode readout = ReadoutMode::Z_MEAN;
    std::uint64_t seed = 0;
    // Comparison preset: no capsule layer, activations read directly from
    // designated qubit groups after preprocessing.
    bool baseline = false;

    void validate() const {
        if (!baseline) {
            if (primary_capsules * qubits_per_primary > total_qubits)
                throw argument_error("config: capsule qubits exceed total qubits");
            if (digit_capsules != 2)
                throw argument_error("config: two-category scope requires J == 2");
            if (channel_kind == ChannelKind::PQC && qubits_per_digit != qubits_per_primary)
                throw argument_error("config: PQC channels need equal capsule sizes");
        } else {
            if (digit_capsules * qubits_per_digit > total_qubits)
                throw argument_error("config: baseline readout groups exceed total qubits");
        }
        if (k < 1 || routing_iters < 1)
            throw argument_error("config: k and routing_iters must be >= 1");
    }
};

struct QCapsNetModel {
    QCapsNetConfig config;
    std::vector<double> preprocess_params;
    std::vector<ChannelSpec> edge_channels;  // row-major M x J (empty for baseline)

    std::size_t preprocess_param_count() const {
        return config.preprocess_depth * 3 * config.total_qubits;
    }

    std::size_t parameter_count() const {
        std::size_t n = preprocess_params.size();
        for (const ChannelSpec& c : edge_channels) n += c.params.size();
        return n;
    }

    const ChannelSpec& edge(std::size_t i, std::size_t j) const {
        return edge_channels[i * config.digit_capsules + j];
    }
    ChannelSpec& edge(std::size_t i, std::size_t j) {
        return edge_channels[i * config.digit_capsules + j];
    }

    std::vector<double> flat_params() const {
        std::vector<double> out = preprocess_params;
        for (const ChannelSpec& c : edge_channels)
            out.insert(out.end(), c.params.begin(), c.params.end());
        return out;
    }

    void set_flat_params(const std::vector<double>& p) {
        if (p.size() != parameter_count())
            throw argument_error("set_flat_params: parameter count mismatch");
        std::size_t off = 0;
        std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(preprocess_params.size()),
                  preprocess_params.begin());
        off += preprocess_params.size();
        for (ChannelSpec& c : edge_channels) {
            std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                      p.begin() + static_cast<std::ptrdiff_t>(off + c.params.size()),
                      c.params.begin());
            off += c.params.size();
        }
    }

    // Which stage a flat-parameter index feeds: -1 for preprocessing,
    // otherwise the row-major edge index. Used for gradient-probe caching.
    int segment_of(std::size_t flat_index) const {
        if (flat_index < preprocess_params.size()) return -1;
        std::size_t off = preprocess_params.size();
        for (std::size_t e = 0; e < edge_channels.size(); ++e) {
            off += edge_channels[e].params.size();
            if (flat_index < off) return static_cast<int>(e);
        }
        throw argument_error("segment_of: index out of range");
    }
};

inline ChannelSpec make_edge_spec(const QCapsNetConfig& cfg) {
    ChannelSpec spec;
    spec.kind = cfg.channel_kind;
    spec.depth = cfg.channel_depth;
    switch (cfg.channel_kind) {
        case ChannelKind::PQC:
            spec.in_qubits = cfg.qubits_per_primary;
            spec.out_qubits = cfg.qubits_per_primary;
            break;
        case ChannelKind::DQFNN:
            spec.in_qubits = cfg.qubits_per_primary;
            spec.out_qubits = cfg.qubits_per_digit;
            break;
        case ChannelKind::PostDQFNN:
            spec.in_qubits = 2 * cfg.qubits_per_digit;
            spec.out_qubits = cfg.qubits_per_digit;
            if (cfg.qubits_per_primary > spec.in_qubits)
                throw argument_error("make_edge_spec: primary capsule too large for post-DQFNN");
            break;
    }
    spec.params.assign(spec.expected_param_count(), 0.0);
    return spec;
}

// Fresh model with angles i.i.d. uniform on [0, 2pi) from the config seed.
inline QCapsNetModel make_model(const QCapsNetConfig& cfg) {
    cfg.validate();
    QCapsNetModel model;
    model.config = cfg;
    Rng rng(cfg.seed);
    model.preprocess_params.resize(cfg.preprocess_depth * 3 * cfg.total_qubits);
    for (double& p : model.preprocess_params) p = rng.uniform(0.0, 2.0 * M_PI);
    if (!cfg.baseline) {
        for (std::size_t e = 0; e < cfg.primary_capsules * cfg.digit_capsules; ++e) {
            ChannelSpec spec = make_edge_spec(cfg);
            for (double& p : spec.params) p = rng.uniform(0.0, 2.0 * M_PI);
            model.edge_channels.push_back(std::move(spec));
        }
    }
    return model;
}

// ------------------------------------------------------------------ readout

// P_c = (1 + mean_j <Z_j>) / 2 over the capsule's qubits.
inline double readout_z(const DensityMatrix& chi) {
    const std::size_t n = chi.num_qubits();
    double zsum = 0.0;
    for (std::size_t q = 0; q < n; ++q) zsum += expectation_z(chi, q);
    return (1.0 + zsum / static_cast<double>(n)) / 2.0;
}

// P_c = Tr(chi^2).
inline double readout_purity(const DensityMatrix& chi) { return purity_k(chi, 1); }

inline double apply_readout(ReadoutMode mode, const DensityMatrix& chi) {
    return mode == ReadoutMode::Z_MEAN ? readout_z(chi) : readout_purity(chi);
}

// ------------------------------------------------------------------- losses

inline double cross_entropy(const std::vector<double>& p, const std::vector<double>& y) {
    if (p.size() != y.size()) throw argument_error("cross_entropy: size mismatch");
    double loss = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c)
        loss -= y[c] * std::log(std::clamp(p[c], 1e-12, 1.0));
    return loss;
}

inline constexpr double kMarginPlus = 0.9;
inline constexpr double kMarginMinus = 0.1;

inline double margin_loss(const std::vector<double>& p, int label) {
    double loss = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double t = (static_cast<int>(c) == label) ? 1.0 : 0.0;
        const double hi = std::max(0.0, kMarginPlus - p[c]);
        const double lo = std::max(0.0, p[c] - kMarginMinus);
        loss += t * hi * hi + 0.5 * (1.0 - t) * lo * lo;
    }
    return loss;
}

inline double mse_loss(const std::vector<double>& x, const std::vector<double>& target) {
    if (x.size() != target.size()) throw argument_error("mse_loss: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

inline double combined_loss(double margin, double mse) { return margin + 0.1 * mse; }

struct LossReport {
    double loss = 0.0;
    std::map<std::string, double> per_term;
    double accuracy = 0.0;
};

// ------------------------------------------------------------------ forward

struct ForwardResult {
    std::vector<double> activations;       // P_c per digit capsule
    std::vector<DensityMatrix> digit_states;
    RoutingState routing;
};

// Stage 1: preprocessing circuit + partial trace into primary capsules.
inline std::vector<DensityMatrix> primary_states(const QCapsNetModel& model,
                                                 const PureState& input) {
    const QCapsNetConfig& cfg = model.config;
    if (input.dim != (std::size_t{1} << cfg.total_qubits))
        throw argument_error("forward: input dimension mismatch");
    const PureState psi = apply_circuit_to_state(cfg.total_qubits, cfg.preprocess_depth,
                                                 model.preprocess_params, input);
    std::vector<DensityMatrix> primaries;
    primaries.reserve(cfg.primary_capsules);
    for (std::size_t i = 0; i < cfg.primary_capsules; ++i) {
        std::vector<std::size_t> keep(cfg.qubits_per_primary);
        for (std::size_t q = 0; q < cfg.qubits_per_primary; ++q)
            keep[q] = i * cfg.qubits_per_primary + q;
        primaries.push_back(reduced_from_pure(psi, keep));
    }
    return primaries;
}

// Stage 2 (single edge): prediction rho_{j|i} from one primary state.
inline DensityMatrix edge_prediction(const QCapsNetModel& model, const DensityMatrix& primary,
                                     std::size_t i, std::size_t j) {
    const ChannelSpec& spec = model.edge(i, j);
    if (spec.kind == ChannelKind::PostDQFNN && primary.num_qubits() < spec.in_qubits)
        return apply_post_dqfnn(
            spec, embed_with_fresh_qubits(primary, spec.in_qubits - primary.num_qubits()));
    return apply_channel(spec, primary);
}

inline PredictionBundle predictions_from_primaries(const QCapsNetModel& model,
                                                   const std::vector<DensityMatrix>& primaries) {
    PredictionBundle bundle;
    bundle.m = model.config.primary_capsules;
    bundle.j = model.config.digit_capsules;
    bundle.states.reserve(bundle.m * bundle.j);
    for (std::size_t i = 0; i < bundle.m; ++i)
        for (std::size_t j = 0; j < bundle.j; ++j)
            bundle.states.push_back(edge_prediction(model, primaries[i], i, j));
    return bundle;
}

// Stage 3: routing + readout.
inline ForwardResult finish_from_predictions(const QCapsNetModel& model,
                                             const PredictionBundle& bundle) {
    QuantumRoutingResult routed =
        route_quantum(bundle, model.config.k, model.config.routing_iters);
    ForwardResult out;
    out.digit_states = std::move(routed.capsules);
    out.routing = std::move(routed.state);
    out.activations.reserve(out.digit_states.size());
    for (const DensityMatrix& chi : out.digit_states)
        out.activations.push_back(apply_readout(model.config.readout, chi));
    return out;
}

inline ForwardResult forward_baseline(const QCapsNetModel& model, const PureState& input) {
    const QCapsNetConfig& cfg = model.config;
    const PureState psi = apply_circuit_to_state(cfg.total_qubits, cfg.preprocess_depth,
                                                 model.preprocess_params, input);
    ForwardResult out;
    for (std::size_t c = 0; c < cfg.digit_capsules; ++c) {
        std::vector<std::size_t> keep(cfg.qubits_per_digit);
        for (std::size_t q = 0; q < cfg.qubits_per_digit; ++q)
            keep[q] = c * cfg.qubits_per_digit + q;
        out.digit_states.push_back(reduced_from_pure(psi, keep));
        out.activations.push_back(apply_readout(cfg.readout, out.digit_states.back()));
    }
    out.routing.m = 1;
    out.routing.j = cfg.digit_capsules;
    out.routing.q.assign(cfg.digit_capsules, 1.0);
    out.routing.overlaps.assign(cfg.digit_capsules, 0.0);
    out.routing.iteration = 0;
    return out;
}

inline ForwardResult forward(const QCapsNetModel& model, const PureState& input) {
    if (model.config.baseline) return forward_baseline(model, input);
    return finish_from_predictions(
        model, predictions_from_primaries(model, primary_states(model, input)));
}

inline int predicted_class(const std::vector<double>& activations) {
    // Ties break toward the lowest class index.
    int best = 0;
    for (std::size_t c = 1; c < activations.size(); ++c)
        if (activations[c] > activations[best]) best = static_cast<int>(c);
    return best;
}

}  // namespace qcaps
