#pragma once

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <functional>
#include <string>
#include <vector>

#include "qcaps/datasets.hpp"
#include "qcaps/model.hpp"
#include "qcaps/optimize.hpp"

namespace qcaps {

enum class LossKind { CrossEntropy, Margin };

inline double classification_loss(LossKind kind, const std::vector<double>& activations,
                                  int label) {
    if (kind == LossKind::Margin) return margin_loss(activations, label);
    std::vector<double> y(activations.size(), 0.0);
    y[static_cast<std::size_t>(label)] = 1.0;
    return cross_entropy(activations, y);
}

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
    double mean_max_dq = 0.0;
};

inline EvalResult evaluate(const QCapsNetModel& model, const Dataset& dataset, LossKind kind) {
    if (dataset.samples.empty()) throw argument_error("evaluate: empty dataset");
    EvalResult r;
    std::size_t correct = 0;
    for (const Sample& s : dataset.samples) {
        const ForwardResult fw = forward(model, s.state);
        r.loss += classification_loss(kind, fw.activations, s.label);
        r.mean_max_dq += fw.routing.max_dq;
        if (predicted_class(fw.activations) == s.label) ++correct;
    }
    const double n = static_cast<double>(dataset.samples.size());
    r.loss /= n;
    r.mean_max_dq /= n;
    r.accuracy = static_cast<double>(correct) / n;
    return r;
}

// Per-sample forward caches reused across gradient probes: preprocessing
// output and per-edge predictions only change when their own parameter
// segment is perturbed.
struct SampleCache {
    std::vector<DensityMatrix> primaries;
    PredictionBundle predictions;
};

inline double staged_sample_loss(const QCapsNetModel& model, const Sample& sample,
                                 const SampleCache& cache, int segment, LossKind kind) {
    ForwardResult fw;
    if (segment < 0) {
        fw = forward(model, sample.state);
    } else {
        const std::size_t e = static_cast<std::size_t>(segment);
        const std::size_t j = model.config.digit_capsules;
        PredictionBundle bundle = cache.predictions;
        bundle.states[e] = edge_prediction(model, cache.primaries[e / j], e / j, e % j);
        fw = finish_from_predictions(model, bundle);
    }
    return classification_loss(kind, fw.activations, sample.label);
}

// Central-difference batch gradient with segment-aware recomputation.
inline std::vector<double> batch_gradient(QCapsNetModel& model,
                                          const std::vector<const Sample*>& batch,
                                          LossKind kind, double h, std::size_t threads) {
    const std::size_t pcount = model.parameter_count();
    std::vector<SampleCache> caches(batch.size());
    for (std::size_t s = 0; s < batch.size(); ++s) {
        if (!model.config.baseline) {
            caches[s].primaries = primary_states(model, batch[s]->state);
            caches[s].predictions = predictions_from_primaries(model, caches[s].primaries);
        }
    }
    const std::vector<double> base = model.flat_params();
    std::vector<double> grads(pcount, 0.0);

    parallel_for(pcount, threads, [&](std::size_t begin, std::size_t end) {
        QCapsNetModel probe = model;
        std::vector<double> params = base;
        for (std::size_t p = begin; p < end; ++p) {
            const int segment = model.config.baseline ? -1 : model.segment_of(p);
            double up = 0.0, down = 0.0;
            for (const double sign : {1.0, -1.0}) {
                params[p] = base[p] + sign * h;
                probe.set_flat_params(params);
                double acc = 0.0;
                for (std::size_t s = 0; s < batch.size(); ++s)
                    acc += staged_sample_loss(probe, *batch[s], caches[s], segment, kind);
                (sign > 0 ? up : down) = acc / static_cast<double>(batch.size());
            }
            params[p] = base[p];
            if (!std::isfinite(up) || !std::isfinite(down))
                throw numeric_error("batch_gradient: non-finite loss at parameter index " +
                                    std::to_string(p));
            grads[p] = (up - down) / (2.0 * h);
        }
    });
    model.set_flat_params(base);
    return grads;
}

struct EpochRecord {
    std::size_t epoch = 0;
    EvalResult train;
    EvalResult test;
};

struct TrainOptions {
    std::size_t epochs = 40;
    std::size_t batch_size = 16;
    LossKind loss_kind = LossKind::CrossEntropy;
    AdamConfig adam;
    double fd_step = 1e-3;
    std::size_t threads = 1;
    std::uint64_t shuffle_seed = 1;
    std::function<void(const EpochRecord&)> on_epoch;  // optional progress hook
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    AdamState adam;  // final optimizer state, for checkpointing
};

inline TrainHistory train(QCapsNetModel& model, const Dataset& train_set,
                          const Dataset& test_set, const TrainOptions& opts) {
    if (opts.epochs > 0 && train_set.samples.empty())
        throw argument_error("train: empty dataset");
    TrainHistory history;
    AdamState adam;
    Rng shuffle_rng(opts.shuffle_seed);

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<std::size_t> order(train_set.samples.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opts.batch_size);
            std::vector<const Sample*> batch;
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(&train_set.samples[order[i]]);
            const std::vector<double> grads =
                batch_gradient(model, batch, opts.loss_kind, opts.fd_step, opts.threads);
            std::vector<double> params = model.flat_params();
            adam_step(params, grads, adam, opts.adam);
            model.set_flat_params(params);
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train = evaluate(model, train_set, opts.loss_kind);
        rec.test = test_set.samples.empty() ? rec.train : evaluate(model, test_set, opts.loss_kind);
        if (opts.on_epoch) opts.on_epoch(rec);
        history.records.push_back(rec);
    }
    history.adam = std::move(adam);
    return history;
}

// ------------------------------------------------------------- history CSV

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("history: cannot open for writing: " + path);
    out << "epoch,split,loss,accuracy,max_dq\n";
    for (const EpochRecord& r : history.records) {
        out << r.epoch << ",train," << format_double(r.train.loss) << ','
            << format_double(r.train.accuracy) << ',' << format_double(r.train.mean_max_dq)
            << '\n';
        out << r.epoch << ",test," << format_double(r.test.loss) << ','
            << format_double(r.test.accuracy) << ',' << format_double(r.test.mean_max_dq)
            << '\n';
    }
}

// --------------------------------------------------------- QCPT checkpoint

inline void save_checkpoint(const QCapsNetModel& model, const AdamState& adam,
                            const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("checkpoint: cannot open for writing: " + path);
    out.write("QCPT", 4);
    detail::write_pod<std::uint32_t>(out, 1);  // format version
    const QCapsNetConfig& c = model.config;
    for (std::size_t v : {c.total_qubits, c.preprocess_depth, c.primary_capsules,
                          c.qubits_per_primary, c.digit_capsules, c.qubits_per_digit,
                          c.channel_depth, c.k, c.routing_iters})
        detail::write_pod<std::uint64_t>(out, v);
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.channel_kind));
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.readout));
    detail::write_pod<std::uint64_t>(out, c.seed);
    detail::write_pod<std::uint8_t>(out, c.baseline ? 1 : 0);

    const std::vector<double> params = model.flat_params();
    detail::write_pod<std::uint64_t>(out, params.size());
    for (double p : params) detail::write_pod<double>(out, p);
    detail::write_pod<std::uint64_t>(out, adam.step);
    detail::write_pod<std::uint64_t>(out, adam.m.size());
    for (double v : adam.m) detail::write_pod<double>(out, v);
    for (double v : adam.v) detail::write_pod<double>(out, v);
}

inline std::pair<QCapsNetModel, AdamState> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("checkpoint: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "QCPT", 4) != 0)
        throw parse_error("checkpoint: bad magic at byte offset 0");
    if (detail::read_pod<std::uint32_t>(in) != 1)
        throw parse_error("checkpoint: unsupported format version");
    QCapsNetConfig c;
    c.total_qubits = detail::read_pod<std::uint64_t>(in);
    c.preprocess_depth = detail::read_pod<std::uint64_t>(in);
    c.primary_capsules = detail::read_pod<std::uint64_t>(in);
    c.qubits_per_primary = detail::read_pod<std::uint64_t>(in);
    c.digit_capsules = detail::read_pod<std::uint64_t>(in);
    c.qubits_per_digit = detail::read_pod<std::uint64_t>(in);
    c.channel_depth = detail::read_pod<std::uint64_t>(in);
    c.k = detail::read_pod<std::uint64_t>(in);
    c.routing_iters = detail::read_pod<std::uint64_t>(in);
    c.channel_kind = static_cast<ChannelKind>(detail::read_pod<std::uint32_t>(in));
    c.readout = static_cast<ReadoutMode>(detail::read_pod<std::uint32_t>(in));
    c.seed = detail::read_pod<std::uint64_t>(in);
    c.baseline = detail::read_pod<std::uint8_t>(in) != 0;

    QCapsNetModel model = make_model(c);
    const auto pcount = detail::read_pod<std::uint64_t>(in);
    std::vector<double> params(pcount);
    for (double& p : params) p = detail::read_pod<double>(in);
    model.set_flat_params(params);

    AdamState adam;
    adam.step = detail::read_pod<std::uint64_t>(in);
    const auto acount = detail::read_pod<std::uint64_t>(in);
    adam.m.resize(acount);
    adam.v.resize(acount);
    for (double& v : adam.m) v = detail::read_pod<double>(in);
    for (double& v : adam.v) v = detail::read_pod<double>(in);
    return {std::move(model), std::move(adam)};
}

}  // namespace qcaps
