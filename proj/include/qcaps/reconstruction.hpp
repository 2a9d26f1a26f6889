#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qcaps/model.hpp"
#include "qcaps/train.hpp"

namespace qcaps {

// ----------------------------------------------------------- Pauli tomography

// Expectation vector over {I,X,Y,Z}^n in lexicographic order (qubit 0 is the
// leading base-4 digit). Each Pauli string has one nonzero per row, so the
// trace is a single pass over chi instead of a matrix product.
inline std::vector<double> tomography_vector(const DensityMatrix& chi) {
    const std::size_t n = chi.num_qubits();
    const std::size_t d = chi.dim();
    const std::size_t count = std::size_t{1} << (2 * n);
    std::vector<double> features(count);
    const ComplexMatrix& m = chi.matrix();
    for (std::size_t s = 0; s < count; ++s) {
        // Per-qubit Pauli digits, qubit 0 first.
        std::size_t flip = 0;
        for (std::size_t q = 0; q < n; ++q) {
            const std::size_t digit = (s >> (2 * (n - 1 - q))) & 3;
            if (digit == 1 || digit == 2) flip |= std::size_t{1} << (n - 1 - q);
        }
        cplx tr = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            const std::size_t c = r ^ flip;
            // Entry P(c, r) as the product of single-qubit factors.
            cplx factor = 1.0;
            for (std::size_t q = 0; q < n; ++q) {
                const std::size_t digit = (s >> (2 * (n - 1 - q))) & 3;
                const std::size_t rb = (r >> (n - 1 - q)) & 1;
                switch (digit) {
                    case 0: break;                                       // I
                    case 1: break;                                       // X
                    case 2: factor *= rb ? cplx(0, 1) : cplx(0, -1); break;  // Y: P(c,r)
                    case 3: factor *= rb ? -1.0 : 1.0; break;            // Z
                }
            }
            tr += m(r, c) * factor;
        }
        if (std::abs(tr.imag()) > 1e-10)
            throw numeric_error("tomography_vector: imaginary residue above 1e-10");
        features[s] = tr.real();
    }
    if (std::abs(features[0] - 1.0) > 1e-10)
        throw contract_error("tomography_vector: identity component not 1");
    return features;
}

// Inverse map: chi = (1/2^n) sum_P c_P P, built entrywise from the same
// per-row structure.
inline DensityMatrix density_from_tomography(const std::vector<double>& features,
                                             std::size_t n) {
    const std::size_t count = std::size_t{1} << (2 * n);
    if (features.size() != count)
        throw argument_error("density_from_tomography: feature length != 4^n");
    const std::size_t d = std::size_t{1} << n;
    ComplexMatrix out(d, d);
    for (std::size_t s = 0; s < count; ++s) {
        std::size_t flip = 0;
        for (std::size_t q = 0; q < n; ++q) {
            const std::size_t digit = (s >> (2 * (n - 1 - q))) & 3;
            if (digit == 1 || digit == 2) flip |= std::size_t{1} << (n - 1 - q);
        }
        for (std::size_t r = 0; r < d; ++r) {
            const std::size_t c = r ^ flip;
            cplx factor = 1.0;
            for (std::size_t q = 0; q < n; ++q) {
                const std::size_t digit = (s >> (2 * (n - 1 - q))) & 3;
                const std::size_t rb = (r >> (n - 1 - q)) & 1;
                switch (digit) {
                    case 0: break;
                    case 1: break;
                    case 2: factor *= rb ? cplx(0, -1) : cplx(0, 1); break;  // Y: P(r,c)
                    case 3: factor *= rb ? -1.0 : 1.0; break;
                }
            }
            out(r, c) += features[s] * factor / static_cast<double>(d);
        }
    }
    return DensityMatrix::from_matrix(std::move(out));
}

// ------------------------------------------------------------------ decoder

struct DecoderMLP {
    std::size_t in = 256, h1 = 128, h2 = 128, out = 256;
    std::vector<double> w1, b1, w2, b2, w3, b3;  // w: row-major (rows x cols)

    std::size_t parameter_count() const {
        return h1 * in + h1 + h2 * h1 + h2 + out * h2 + out;
    }
};

inline DecoderMLP make_decoder(std::size_t in, std::size_t h1, std::size_t h2,
                               std::size_t out, Rng& rng) {
    DecoderMLP d;
    d.in = in;
    d.h1 = h1;
    d.h2 = h2;
    d.out = out;
    auto init = [&](std::vector<double>& w, std::size_t rows, std::size_t cols) {
        const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
        w.resize(rows * cols);
        for (double& v : w) v = rng.uniform(-s, s);
    };
    init(d.w1, d.h1, d.in);
    init(d.w2, d.h2, d.h1);
    init(d.w3, d.out, d.h2);
    d.b1.assign(d.h1, 0.0);
    d.b2.assign(d.h2, 0.0);
    d.b3.assign(d.out, 0.0);
    return d;
}

namespace detail {

inline void dense(const std::vector<double>& w, const std::vector<double>& b,
                  const std::vector<double>& x, std::vector<double>& y) {
    const std::size_t rows = b.size();
    const std::size_t cols = x.size();
    y.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace detail

struct DecoderTrace {
    std::vector<double> a1, a2, output;  // post-activation values per layer
};

inline std::vector<double> decoder_forward(const DecoderMLP& mlp,
                                           const std::vector<double>& features,
                                           DecoderTrace* trace = nullptr) {
    if (features.size() != mlp.in)
        throw argument_error("decoder_forward: feature size mismatch");
    std::vector<double> a1, a2, o;
    detail::dense(mlp.w1, mlp.b1, features, a1);
    for (double& v : a1) v = std::max(0.0, v);
    detail::dense(mlp.w2, mlp.b2, a1, a2);
    for (double& v : a2) v = std::max(0.0, v);
    detail::dense(mlp.w3, mlp.b3, a2, o);
    for (double& v : o) v = 1.0 / (1.0 + std::exp(-v));
    if (trace) {
        trace->a1 = a1;
        trace->a2 = a2;
        trace->output = o;
    }
    return o;
}

// Flat layout: w1, b1, w2, b2, w3, b3.
inline std::vector<double> decoder_flat_params(const DecoderMLP& d) {
    std::vector<double> p;
    p.reserve(d.parameter_count());
    for (const auto* v : {&d.w1, &d.b1, &d.w2, &d.b2, &d.w3, &d.b3})
        p.insert(p.end(), v->begin(), v->end());
    return p;
}

inline void decoder_set_flat_params(DecoderMLP& d, const std::vector<double>& p) {
    if (p.size() != d.parameter_count())
        throw argument_error("decoder_set_flat_params: size mismatch");
    std::size_t off = 0;
    for (auto* v : {&d.w1, &d.b1, &d.w2, &d.b2, &d.w3, &d.b3}) {
        std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
                  p.begin() + static_cast<std::ptrdiff_t>(off + v->size()), v->begin());
        off += v->size();
    }
}

// Exact backprop of mse_loss(decoder(features), target) through the dense
// layers, accumulated into a flat gradient (same layout as flat params).
inline void decoder_backprop_mse(const DecoderMLP& mlp, const std::vector<double>& features,
                                 const DecoderTrace& trace, const std::vector<double>& target,
                                 double scale, std::vector<double>& grad) {
    if (grad.size() != mlp.parameter_count())
        throw argument_error("decoder_backprop_mse: gradient size mismatch");
    const std::size_t n_out = mlp.out;
    std::vector<double> d3(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double o = trace.output[i];
        const double dmse = 2.0 * (o - target[i]) / static_cast<double>(n_out);
        d3[i] = scale * dmse * o * (1.0 - o);  // sigmoid'
    }
    std::vector<double> d2(mlp.h2, 0.0), d1(mlp.h1, 0.0);
    for (std::size_t r = 0; r < n_out; ++r)
        for (std::size_t c = 0; c < mlp.h2; ++c) d2[c] += mlp.w3[r * mlp.h2 + c] * d3[r];
    for (std::size_t c = 0; c < mlp.h2; ++c)
        if (trace.a2[c] <= 0.0) d2[c] = 0.0;  // ReLU'
    for (std::size_t r = 0; r < mlp.h2; ++r)
        for (std::size_t c = 0; c < mlp.h1; ++c) d1[c] += mlp.w2[r * mlp.h1 + c] * d2[r];
    for (std::size_t c = 0; c < mlp.h1; ++c)
        if (trace.a1[c] <= 0.0) d1[c] = 0.0;

    std::size_t off = 0;
    for (std::size_t r = 0; r < mlp.h1; ++r)
        for (std::size_t c = 0; c < mlp.in; ++c) grad[off + r * mlp.in + c] += d1[r] * features[c];
    off += mlp.h1 * mlp.in;
    for (std::size_t r = 0; r < mlp.h1; ++r) grad[off + r] += d1[r];
    off += mlp.h1;
    for (std::size_t r = 0; r < mlp.h2; ++r)
        for (std::size_t c = 0; c < mlp.h1; ++c) grad[off + r * mlp.h1 + c] += d2[r] * trace.a1[c];
    off += mlp.h2 * mlp.h1;
    for (std::size_t r = 0; r < mlp.h2; ++r) grad[off + r] += d2[r];
    off += mlp.h2;
    for (std::size_t r = 0; r < mlp.out; ++r)
        for (std::size_t c = 0; c < mlp.h2; ++c) grad[off + r * mlp.h2 + c] += d3[r] * trace.a2[c];
    off += mlp.out * mlp.h2;
    for (std::size_t r = 0; r < mlp.out; ++r) grad[off + r] += d3[r];
}

// -------------------------------------------------------------- perturbation

enum class PerturbKind { X1, Z4, GLOBAL_Z };

inline const char* perturb_kind_name(PerturbKind kind) {
    switch (kind) {
        case PerturbKind::X1: return "x1";
        case PerturbKind::Z4: return "z4";
        case PerturbKind::GLOBAL_Z: return "global_z";
    }
    throw argument_error("perturb_kind_name: unknown kind");
}

// U chi U† with U = exp(-i theta G); G = X on qubit 0, Z on qubit 3, or
// Z0 Z1 Z2 Z3. Diagonal generators become a phase-vector conjugation.
inline DensityMatrix perturb_capsule(const DensityMatrix& chi, PerturbKind kind,
                                     double theta) {
    const std::size_t n = chi.num_qubits();
    const std::size_t d = chi.dim();
    if (kind != PerturbKind::X1 && n < 4)
        throw argument_error("perturb_capsule: Z4 and GLOBAL_Z need at least 4 qubits");

    if (kind == PerturbKind::X1) {
        // exp(-i theta X) = cos(theta) I - i sin(theta) X on qubit 0.
        const cplx c = std::cos(theta);
        const cplx s = cplx(0.0, -std::sin(theta));
        const std::size_t mask = d >> 1;
        const ComplexMatrix& m = chi.matrix();
        ComplexMatrix t(d, d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t k = 0; k < d; ++k)
                t(r, k) = c * m(r, k) + s * m(r ^ mask, k);
        ComplexMatrix out(d, d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t k = 0; k < d; ++k)
                out(r, k) = t(r, k) * std::conj(c) + t(r, k ^ mask) * std::conj(s);
        return DensityMatrix::from_matrix(std::move(out));
    }

    std::vector<cplx> phase(d);
    for (std::size_t r = 0; r < d; ++r) {
        double sign;
        if (kind == PerturbKind::Z4) {
            sign = ((r >> (n - 4)) & 1) ? -1.0 : 1.0;
        } else {
            std::size_t pop = 0;
            for (std::size_t q = 0; q < 4; ++q) pop += (r >> (n - 1 - q)) & 1;
            sign = (pop & 1) ? -1.0 : 1.0;
        }
        phase[r] = std::exp(cplx(0.0, -theta * sign));
    }
    ComplexMatrix out(d, d);
    const ComplexMatrix& m = chi.matrix();
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) out(r, c) = phase[r] * m(r, c) * std::conj(phase[c]);
    return DensityMatrix::from_matrix(std::move(out));
}

inline std::vector<double> default_sweep_thetas() {
    std::vector<double> thetas;
    for (int i = 0; i < 7; ++i) thetas.push_back(-0.2 + 0.4 * i / 6.0);
    return thetas;
}

// One reconstructed image (decoder output) per theta, obtained by perturbing
// the most active digit capsule of the forward pass.
inline std::vector<std::vector<double>> perturbation_sweep(const QCapsNetModel& model,
                                                           const DecoderMLP& decoder,
                                                           const Sample& sample,
                                                           PerturbKind kind,
                                                           const std::vector<double>& thetas) {
    const ForwardResult fw = forward(model, sample.state);
    std::size_t best = 0;
    for (std::size_t c = 1; c < fw.activations.size(); ++c)
        if (fw.activations[c] > fw.activations[best]) best = c;
    bool tie = false;
    for (std::size_t c = 1; c < fw.activations.size(); ++c)
        if (c != best && fw.activations[c] == fw.activations[best]) tie = true;
    if (tie) {
        best = 0;
        std::cerr << "perturbation_sweep: activation tie, using capsule 0\n";
    }
    std::vector<std::vector<double>> images;
    images.reserve(thetas.size());
    for (double theta : thetas) {
        const DensityMatrix chi = perturb_capsule(fw.digit_states[best], kind, theta);
        images.push_back(decoder_forward(decoder, tomography_vector(chi)));
    }
    return images;
}

// --------------------------------------------------------------- PGM output

inline void write_pgm(const std::string& path, const std::vector<double>& pixels,
                      std::size_t width = 16, std::size_t height = 16) {
    if (pixels.size() != width * height) throw argument_error("write_pgm: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("write_pgm: cannot open for writing: " + path);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    for (double p : pixels) {
        const double clamped = std::clamp(p, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
}

inline std::string recon_filename(int label, PerturbKind kind, double theta) {
    const long milli = std::lround(theta * 1000.0);
    return "recon_" + std::to_string(label) + "_" + perturb_kind_name(kind) + "_" +
           std::to_string(milli) + ".pgm";
}

// ------------------------------------------------------------ joint training

struct ReconEpochRecord {
    std::size_t epoch = 0;  // 0 = pre-training evaluation
    double loss = 0.0;
    double margin = 0.0;
    double mse = 0.0;
};

struct ReconTrainOptions {
    std::size_t epochs = 20;
    std::size_t batch_size = 8;
    AdamConfig quantum_adam;
    AdamConfig decoder_adam;
    double fd_step = 1e-3;
    std::size_t threads = 1;
    std::uint64_t shuffle_seed = 1;
    bool freeze_quantum = false;
    std::function<void(const ReconEpochRecord&)> on_epoch;
};

namespace detail {

struct ReconSampleEval {
    double margin = 0.0;
    double mse = 0.0;
    std::vector<double> features;  // tomography of the true-label capsule
    DecoderTrace trace;
};

// Margin on purity activations plus 0.1 * MSE of the decoded true-label
// capsule against the sample's 16x16 pixels.
inline ReconSampleEval recon_eval(const DecoderMLP& decoder, const Sample& sample,
                                  const ForwardResult& fw) {
    ReconSampleEval ev;
    std::vector<double> purities;
    purities.reserve(fw.digit_states.size());
    for (const DensityMatrix& chi : fw.digit_states) purities.push_back(purity_k(chi, 1));
    ev.margin = margin_loss(purities, sample.label);
    ev.features = tomography_vector(fw.digit_states[static_cast<std::size_t>(sample.label)]);
    const std::vector<double> decoded = decoder_forward(decoder, ev.features, &ev.trace);
    ev.mse = mse_loss(decoded, sample.pixels);
    return ev;
}

inline double recon_loss(const QCapsNetModel& model, const DecoderMLP& decoder,
                         const Sample& sample) {
    const ForwardResult fw = forward(model, sample.state);
    const ReconSampleEval ev = recon_eval(decoder, sample, fw);
    return combined_loss(ev.margin, ev.mse);
}

}  // namespace detail

inline ReconEpochRecord evaluate_reconstruction(const QCapsNetModel& model,
                                                const DecoderMLP& decoder,
                                                const Dataset& dataset) {
    if (dataset.samples.empty()) throw argument_error("evaluate_reconstruction: empty dataset");
    ReconEpochRecord rec;
    for (const Sample& s : dataset.samples) {
        const ForwardResult fw = forward(model, s.state);
        const detail::ReconSampleEval ev = detail::recon_eval(decoder, s, fw);
        rec.margin += ev.margin;
        rec.mse += ev.mse;
    }
    const double n = static_cast<double>(dataset.samples.size());
    rec.margin /= n;
    rec.mse /= n;
    rec.loss = combined_loss(rec.margin, rec.mse);
    return rec;
}

// Decoder weights learn by exact backprop of the 0.1 * MSE term; quantum
// parameters by central differences of the full loss, with the same staged
// per-edge recomputation used by the classifier gradient.
inline std::vector<ReconEpochRecord> train_reconstruction(QCapsNetModel& model,
                                                          DecoderMLP& decoder,
                                                          const Dataset& dataset,
                                                          const ReconTrainOptions& opts) {
    std::vector<ReconEpochRecord> history;
    ReconEpochRecord initial = evaluate_reconstruction(model, decoder, dataset);
    initial.epoch = 0;
    if (opts.on_epoch) opts.on_epoch(initial);
    history.push_back(initial);
    if (opts.epochs == 0) return history;

    AdamState q_adam, d_adam;
    Rng shuffle_rng(opts.shuffle_seed);
    const std::size_t pcount = model.parameter_count();

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<std::size_t> order(dataset.samples.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opts.batch_size);
            std::vector<const Sample*> batch;
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(&dataset.samples[order[i]]);
            const double inv_b = 1.0 / static_cast<double>(batch.size());

            // Decoder gradient (analytic) and per-sample caches for the
            // quantum probes, from one shared forward pass per sample.
            std::vector<double> d_grad(decoder.parameter_count(), 0.0);
            std::vector<SampleCache> caches(batch.size());
            for (std::size_t s = 0; s < batch.size(); ++s) {
                caches[s].primaries = primary_states(model, batch[s]->state);
                caches[s].predictions = predictions_from_primaries(model, caches[s].primaries);
                const ForwardResult fw =
                    finish_from_predictions(model, caches[s].predictions);
                const detail::ReconSampleEval ev =
                    detail::recon_eval(decoder, *batch[s], fw);
                decoder_backprop_mse(decoder, ev.features, ev.trace, batch[s]->pixels,
                                     0.1 * inv_b, d_grad);
            }

            if (!opts.freeze_quantum) {
                const std::vector<double> base = model.flat_params();
                std::vector<double> q_grad(pcount, 0.0);
                parallel_for(pcount, opts.threads, [&](std::size_t begin, std::size_t end) {
                    QCapsNetModel probe = model;
                    std::vector<double> params = base;
                    for (std::size_t p = begin; p < end; ++p) {
                        const int segment = model.segment_of(p);
                        double up = 0.0, down = 0.0;
                        for (const double sign : {1.0, -1.0}) {
                            params[p] = base[p] + sign * opts.fd_step;
                            probe.set_flat_params(params);
                            double acc = 0.0;
                            for (std::size_t s = 0; s < batch.size(); ++s) {
                                ForwardResult fw;
                                if (segment < 0) {
                                    fw = forward(probe, batch[s]->state);
                                } else {
                                    const std::size_t e = static_cast<std::size_t>(segment);
                                    const std::size_t j = probe.config.digit_capsules;
                                    PredictionBundle bundle = caches[s].predictions;
                                    bundle.states[e] = edge_prediction(
                                        probe, caches[s].primaries[e / j], e / j, e % j);
                                    fw = finish_from_predictions(probe, bundle);
                                }
                                const detail::ReconSampleEval ev =
                                    detail::recon_eval(decoder, *batch[s], fw);
                                acc += combined_loss(ev.margin, ev.mse);
                            }
                            (sign > 0 ? up : down) = acc * inv_b;
                        }
                        params[p] = base[p];
                        if (!std::isfinite(up) || !std::isfinite(down))
                            throw numeric_error(
                                "train_reconstruction: non-finite loss at parameter index " +
                                std::to_string(p));
                        q_grad[p] = (up - down) / (2.0 * opts.fd_step);
                    }
                });
                model.set_flat_params(base);
                std::vector<double> q_params = model.flat_params();
                adam_step(q_params, q_grad, q_adam, opts.quantum_adam);
                model.set_flat_params(q_params);
            }

            std::vector<double> d_params = decoder_flat_params(decoder);
            adam_step(d_params, d_grad, d_adam, opts.decoder_adam);
            decoder_set_flat_params(decoder, d_params);
        }

        ReconEpochRecord rec = evaluate_reconstruction(model, decoder, dataset);
        rec.epoch = epoch + 1;
        if (opts.on_epoch) opts.on_epoch(rec);
        history.push_back(rec);
    }
    return history;
}

}  // namespace qcaps
