// Acceptance gate: one pass/fail line per criterion. Modes split the slow
// experiments into separate ctest entries:
//   fast  -> criteria 1,2,3,4,5,8,9,11
//   spt   -> criterion 6
//   mnist -> criterion 7   (needs image/label fixture paths)
//   recon -> criterion 10  (needs image/label fixture paths)

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qcaps/circuit_verify.hpp"
#include "qcaps/datasets.hpp"
#include "qcaps/random_states.hpp"
#include "qcaps/reconstruction.hpp"
#include "qcaps/train.hpp"

using namespace qcaps;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------- criterion 1

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double max_domega = 0.0, max_dp0 = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t m = 2 + inst % 3;       // 2,3,4
        const std::size_t k = 1 + (inst / 3) % 3; // 1,2,3
        std::vector<DensityMatrix> column;
        for (std::size_t i = 0; i < m; ++i) column.push_back(random_density_matrix(rng, 2, 2));
        const DensityMatrix chi = random_density_matrix(rng, 2, 2);

        std::vector<double> omegas(m);
        double big_a = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            omegas[i] = overlap_k(column[i], chi, k);
            big_a += 1.0 + omegas[i];
        }
        ComplexMatrix chi_copies = chi.matrix();
        for (std::size_t c = 1; c < k; ++c) chi_copies = tensor_product(chi_copies, chi.matrix());
        const SwapTestResult res =
            swap_test_overlap_circuit(QRamState::uniform_from_column(column, k), chi_copies, k);

        const std::vector<double> w = overlap_weights(omegas);
        for (std::size_t i = 0; i < m; ++i)
            max_domega = std::max(max_domega, std::abs(res.omega[i] - w[i]));
        max_dp0 = std::max(max_dp0, std::abs(res.p0 - big_a / (2.0 * double(m))));
    }
    const double elapsed = seconds_since(t0);
    const bool pass = max_domega <= 1e-10 && max_dp0 <= 1e-10 && elapsed < 30.0;
    report(1, pass,
           fmt("swap-test circuit vs analytic: max|dw|=%.2e max|dp0|=%.2e (tol 1e-10), %.1fs",
               max_domega, max_dp0, elapsed));
}

// ---------------------------------------------------------------- criterion 2

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(102);
    double max_rel = 0.0, ratio_lo = 1e300, ratio_hi = 0.0;
    for (int v = 0; v < 20; ++v) {
        const std::size_t m = 2 + v % 3;
        std::vector<double> qtilde(m);
        for (double& q : qtilde) q = rng.uniform(0.05, 1.0);
        const SmallTReport rep = verify_small_t_limit(qtilde, {0.01, 0.005, 0.0025});
        max_rel = std::max(max_rel, rep.entries[0].max_rel_deviation);
        for (double r : rep.halving_ratios) {
            ratio_lo = std::min(ratio_lo, r);
            ratio_hi = std::max(ratio_hi, r);
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass =
        max_rel <= 1e-3 && ratio_lo >= 3.5 && ratio_hi <= 4.5 && elapsed < 30.0;
    report(2, pass,
           fmt("assignment small-t limit: max rel err %.2e (tol 1e-3), halving ratios "
               "[%.3f, %.3f] (want 4+-0.5), %.1fs",
               max_rel, ratio_lo, ratio_hi, elapsed));
}

// ---------------------------------------------------------------- criterion 3

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    // Measured exactly as stated: 100 random 3x2 bundles of 2-qubit states,
    // k = 3, max|dq| of iteration 3 below 1e-3 in at least 95 cases. The
    // longer-horizon counts are reported alongside so a failure here can be
    // distinguished from a broken router: the update map is a fixed-point
    // iteration with contraction rate ~0.7 per step on generic random
    // bundles, so it does converge - just not within three iterations.
    int conv3 = 0, conv10 = 0, conv30 = 0;
    double worst3 = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        Rng rng(103 + static_cast<std::uint64_t>(rep));
        PredictionBundle bundle;
        bundle.m = 3;
        bundle.j = 2;
        for (int i = 0; i < 6; ++i) bundle.states.push_back(random_density_matrix(rng, 4, 2));
        const double dq3 = route_quantum(bundle, 3, 3).state.max_dq;
        worst3 = std::max(worst3, dq3);
        if (dq3 < 1e-3) ++conv3;
        if (route_quantum(bundle, 3, 10).state.max_dq < 1e-3) ++conv10;
        if (route_quantum(bundle, 3, 30).state.max_dq < 1e-3) ++conv30;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = conv3 >= 95 && elapsed < 60.0;
    report(3, pass,
           fmt("routing convergence by iteration 3: %d/100 with max|dq| < 1e-3 (need >= 95), "
               "worst %.2e; for reference %d/100 by iteration 10 and %d/100 by iteration 30, "
               "%.1fs",
               conv3, worst3, conv10, conv30, elapsed));
}

// ---------------------------------------------------------------- criterion 4

void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(104);
    double worst_trace = 0.0, worst_eig = 0.0;
    int count = 0;
    while (count < 200) {
        for (ChannelKind kind :
             {ChannelKind::PQC, ChannelKind::DQFNN, ChannelKind::PostDQFNN}) {
            ChannelSpec spec;
            spec.kind = kind;
            spec.in_qubits = 2;
            spec.out_qubits = kind == ChannelKind::PostDQFNN ? 1 : 2;
            spec.depth = 1 + count % 3;
            spec.params.resize(spec.expected_param_count());
            for (double& p : spec.params) p = rng.uniform(0.0, 2.0 * M_PI);
            const DensityMatrix chi = random_density_matrix(rng, 4, 1 + count % 3);
            const DensityMatrix out = apply_channel(spec, chi);
            worst_trace = std::max(worst_trace, std::abs(trace(out.matrix()).real() - 1.0) +
                                                    std::abs(trace(out.matrix()).imag()));
            worst_eig = std::min(worst_eig, out.min_eigenvalue());
            ++count;
            if (count == 200) break;
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst_trace <= 1e-10 && worst_eig >= -1e-9 && elapsed < 60.0;
    report(4, pass,
           fmt("CPTP suite over 200 channel applications: max trace drift %.2e (tol 1e-10), "
               "min eigenvalue %.2e (tol -1e-9), %.1fs",
               worst_trace, worst_eig, elapsed));
}

// ---------------------------------------------------------------- criterion 5

// Independent transcript-level reimplementation of the classical routing loop.
struct Transcript {
    std::vector<std::vector<std::vector<double>>> r;  // per iteration, M x J
    std::vector<std::vector<std::vector<double>>> v;  // per iteration, J vectors
};

Transcript oracle_transcript(const std::vector<std::vector<std::vector<double>>>& u,
                             std::size_t iterations) {
    const std::size_t m = u.size(), j = u[0].size();
    Transcript t;
    std::vector<std::vector<double>> b(m, std::vector<double>(j, 0.0));
    for (std::size_t e = 0; e < iterations; ++e) {
        std::vector<std::vector<double>> r(m, std::vector<double>(j));
        for (std::size_t i = 0; i < m; ++i) {
            double mx = b[i][0], z = 0.0;
            for (double x : b[i]) mx = std::max(mx, x);
            for (std::size_t col = 0; col < j; ++col) z += std::exp(b[i][col] - mx);
            for (std::size_t col = 0; col < j; ++col) r[i][col] = std::exp(b[i][col] - mx) / z;
        }
        std::vector<std::vector<double>> v(j);
        for (std::size_t col = 0; col < j; ++col) {
            std::vector<double> s(u[0][col].size(), 0.0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t d = 0; d < s.size(); ++d) s[d] += r[i][col] * u[i][col][d];
            double n2 = 0.0;
            for (double x : s) n2 += x * x;
            v[col].assign(s.size(), 0.0);
            if (n2 > 0.0)
                for (std::size_t d = 0; d < s.size(); ++d)
                    v[col][d] = n2 / (1.0 + n2) * s[d] / std::sqrt(n2);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t col = 0; col < j; ++col) {
                double dot = 0.0;
                for (std::size_t d = 0; d < v[col].size(); ++d) dot += u[i][col][d] * v[col][d];
                b[i][col] += dot;
            }
        t.r.push_back(std::move(r));
        t.v.push_back(std::move(v));
    }
    return t;
}

void criterion_5() {
    const std::vector<std::vector<std::vector<double>>> u = {
        {{0.9, -0.2, 0.1, 0.4}, {-0.5, 0.3, 0.8, -0.1}},
        {{0.2, 0.7, -0.3, 0.5}, {0.1, -0.6, 0.4, 0.9}},
        {{-0.4, 0.1, 0.6, -0.7}, {0.8, 0.2, -0.5, 0.3}},
    };
    const std::size_t iterations = 4;
    const Transcript t = oracle_transcript(u, iterations);
    double max_diff = 0.0;
    // Compare the production routine at every truncation depth, which pins
    // every line of every iteration of the transcript.
    for (std::size_t e = 1; e <= iterations; ++e) {
        const ClassicalRoutingResult res = route_classical(u, e);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t col = 0; col < 2; ++col)
                max_diff = std::max(max_diff, std::abs(res.r[i][col] - t.r[e - 1][i][col]));
        for (std::size_t col = 0; col < 2; ++col)
            for (std::size_t d = 0; d < 4; ++d)
                max_diff =
                    std::max(max_diff, std::abs(res.capsules[col][d] - t.v[e - 1][col][d]));
    }
    report(5, max_diff <= 1e-12,
           fmt("classical routing vs independent transcript oracle: max |diff| %.2e "
               "(tol 1e-12) across %zu iterations",
               max_diff, iterations));
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
    const auto t0 = std::chrono::steady_clock::now();
    QCapsNetConfig cfg;
    cfg.total_qubits = 2;
    cfg.preprocess_depth = 1;
    cfg.primary_capsules = 1;
    cfg.qubits_per_primary = 2;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = 2;
    cfg.channel_kind = ChannelKind::PQC;
    cfg.channel_depth = 1;
    cfg.seed = 108;
    QCapsNetModel model = make_model(cfg);

    Rng rng(108);
    std::vector<Sample> samples(3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i].state = random_pure_state(rng, 4);
        samples[i].label = static_cast<int>(i % 2);
    }
    auto loss_of = [&](const std::vector<double>& params) {
        QCapsNetModel probe = model;
        probe.set_flat_params(params);
        double acc = 0.0;
        for (const Sample& s : samples) {
            const ForwardResult fw = forward(probe, s.state);
            acc += classification_loss(LossKind::CrossEntropy, fw.activations, s.label);
        }
        return acc / static_cast<double>(samples.size());
    };

    const std::vector<double> base = model.flat_params();
    const double h = 0.05;
    const std::vector<double> g1 = grad_finite_diff(base, loss_of, h);
    const std::vector<double> g2 = grad_finite_diff(base, loss_of, h / 2.0);
    const std::vector<double> g4 = grad_finite_diff(base, loss_of, h / 4.0);

    std::size_t good = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double d1 = g1[i] - g2[i];
        const double d2 = g2[i] - g4[i];
        if (std::abs(d2) < 1e-12) {
            ++good;  // differences already at noise floor: converged
            continue;
        }
        const double ratio = d1 / d2;
        if (ratio >= 3.5 && ratio <= 4.5) ++good;
    }
    const double frac = static_cast<double>(good) / static_cast<double>(base.size());
    const double elapsed = seconds_since(t0);
    const bool pass = frac >= 0.95 && elapsed < 60.0;
    report(8, pass,
           fmt("Richardson step-halving: %zu/%zu parameters with ratio in [3.5,4.5] "
               "(need >= 95%%), %.1fs",
               good, base.size(), elapsed));
}

// ---------------------------------------------------------------- criterion 9

void criterion_9() {
    Rng rng(109);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const DensityMatrix chi = random_density_matrix(rng, 16, 1 + i % 4);
        const DensityMatrix back = density_from_tomography(tomography_vector(chi), 4);
        worst = std::max(worst, max_abs_diff(chi.matrix(), back.matrix()));
    }
    report(9, worst <= 1e-10,
           fmt("tomography round-trip on 50 random 4-qubit states: max |diff| %.2e "
               "(tol 1e-10)",
               worst));
}

// --------------------------------------------------------------- criterion 11

void criterion_11() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "qcaps_acceptance_det";
    fs::remove_all(base);

    auto produce = [&](const fs::path& dir) {
        fs::create_directories(dir);
        // Training artifacts (history + checkpoint) at smoke scale.
        QCapsNetConfig cfg;
        cfg.total_qubits = 4;
        cfg.preprocess_depth = 1;
        cfg.primary_capsules = 2;
        cfg.qubits_per_primary = 2;
        cfg.digit_capsules = 2;
        cfg.qubits_per_digit = 2;
        cfg.channel_kind = ChannelKind::DQFNN;
        cfg.channel_depth = 1;
        cfg.seed = 111;
        QCapsNetModel model = make_model(cfg);
        Dataset ds;
        Rng rng(111);
        for (int i = 0; i < 6; ++i) {
            Sample s;
            s.state = random_pure_state(rng, 16);
            s.label = i % 2;
            s.pixels.assign(256, 0.25);
            ds.samples.push_back(std::move(s));
        }
        TrainOptions opts;
        opts.epochs = 2;
        opts.batch_size = 3;
        opts.shuffle_seed = 111;
        const TrainHistory history = train(model, ds, ds, opts);
        write_history_csv(history, (dir / "history.csv").string());
        save_checkpoint(model, history.adam, (dir / "model.qcpt").string());

        // Image artifact: perturbation sweep through the decoder.
        Rng drng(112);
        DecoderMLP decoder = make_decoder(16, 8, 8, 256, drng);
        const auto images = perturbation_sweep(model, decoder, ds.samples[0], PerturbKind::X1,
                                               default_sweep_thetas());
        for (std::size_t t = 0; t < images.size(); ++t)
            write_pgm((dir / recon_filename(0, PerturbKind::X1,
                                            default_sweep_thetas()[t])).string(),
                      images[t]);
    };
    produce(base / "a");
    produce(base / "b");

    bool identical = true;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(base / "a")) {
        ++files;
        const auto fa = slurp(entry.path().string());
        const auto fb = slurp((base / "b" / entry.path().filename()).string());
        if (fa.empty() || fa != fb) identical = false;
    }
    fs::remove_all(base);
    report(11, identical && files >= 9,
           fmt("seeded rerun artifacts byte-identical: %zu files compared (csv, checkpoint, "
               "pgm)",
               files));
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = 8;
    std::fprintf(stderr, "criterion 6: building datasets...\n");
    const Dataset train_set = sample_spt_dataset(n, 200, 0.0, 2.0, 106);
    const Dataset test_set = sample_spt_dataset(n, 40, 0.8, 1.2, 107);

    QCapsNetConfig cfg;
    cfg.total_qubits = n;
    cfg.preprocess_depth = 5;
    cfg.primary_capsules = 2;
    cfg.qubits_per_primary = 3;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = 2;
    cfg.channel_kind = ChannelKind::DQFNN;
    cfg.channel_depth = 1;
    cfg.seed = 106;
    QCapsNetModel model = make_model(cfg);

    TrainOptions opts;
    opts.epochs = 15;  // criterion allows up to 60; accuracy plateaus by ~10
    opts.batch_size = 16;
    opts.shuffle_seed = 106;
    opts.on_epoch = [](const EpochRecord& r) {
        std::fprintf(stderr, "criterion 6 epoch %zu: train acc %.3f test acc %.3f\n", r.epoch,
                     r.train.accuracy, r.test.accuracy);
    };
    const TrainHistory history = train(model, train_set, test_set, opts);
    const double train_inacc = 1.0 - history.records.back().train.accuracy;

    // Crossing point of the two activations on a fine alpha grid.
    double crossing = -1.0;
    double prev_alpha = 0.0, prev_diff = 0.0;
    bool have_prev = false;
    for (int g = 0; g <= 80; ++g) {
        const double alpha = 0.8 + 0.4 * static_cast<double>(g) / 80.0;
        const ForwardResult fw = forward(model, ground_state(build_cluster_ising(n, alpha)));
        const double diff = fw.activations[0] - fw.activations[1];
        if (have_prev && crossing < 0.0 && (prev_diff > 0.0) != (diff > 0.0))
            crossing = prev_alpha + (alpha - prev_alpha) * prev_diff / (prev_diff - diff);
        prev_alpha = alpha;
        prev_diff = diff;
        have_prev = true;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = train_inacc <= 5e-2 && crossing >= 0.90 && crossing <= 1.10 &&
                      elapsed < 1800.0;
    report(6, pass,
           fmt("spin-chain phases: train inaccuracy %.3f (tol 0.05), crossing %.3f "
               "(want [0.90,1.10]), %.0fs",
               train_inacc, crossing, elapsed));
}

// ---------------------------------------------------------------- criterion 7

void criterion_7(const std::string& images_path, const std::string& labels_path) {
    const auto t0 = std::chrono::steady_clock::now();
    const IdxImages images = parse_idx_images(read_binary_file(images_path));
    const IdxLabels labels = parse_idx_labels(read_binary_file(labels_path));
    const Dataset all = build_mnist_subset(images, labels, 150, 107);
    Dataset train_set, test_set;
    for (std::size_t i = 0; i < all.samples.size(); ++i)
        (i < 200 ? train_set : test_set).samples.push_back(all.samples[i]);

    auto run_variant = [&](ChannelKind kind, bool baseline, std::size_t preprocess_depth,
                           std::size_t depth) {
        QCapsNetConfig cfg;
        cfg.total_qubits = 9;
        cfg.preprocess_depth = preprocess_depth;
        cfg.primary_capsules = 3;
        cfg.qubits_per_primary = 3;
        cfg.digit_capsules = 2;
        cfg.qubits_per_digit = 3;
        cfg.channel_kind = kind;
        cfg.channel_depth = depth;
        cfg.readout = ReadoutMode::PURITY;
        cfg.seed = 107;
        cfg.baseline = baseline;
        QCapsNetModel model = make_model(cfg);
        TrainOptions opts;
        opts.epochs = 12;  // criterion allows up to 40
        opts.batch_size = 16;
        // Margin loss throughout: cross-entropy on unnormalized capsule
        // activations admits a degenerate "everything active" optimum.
        opts.loss_kind = LossKind::Margin;
        opts.shuffle_seed = 107;
        opts.on_epoch = [&](const EpochRecord& r) {
            std::fprintf(stderr, "criterion 7 [%s%s] epoch %zu: train %.3f test %.3f\n",
                         baseline ? "baseline" : channel_kind_name(kind),
                         baseline ? "" : fmt("/d%zu", depth).c_str(), r.epoch,
                         r.train.accuracy, r.test.accuracy);
        };
        const TrainHistory history = train(model, train_set, test_set, opts);
        return history.records.back().test.accuracy;
    };

    const double acc_pqc = run_variant(ChannelKind::PQC, false, 5, 1);
    const double acc_dqfnn = run_variant(ChannelKind::DQFNN, false, 5, 1);
    const double acc_post = run_variant(ChannelKind::PostDQFNN, false, 5, 1);
    // Parameter-matched baseline: variants hold ~189-261 parameters; 7
    // preprocessing layers give 189.
    const double acc_base = run_variant(ChannelKind::PQC, true, 7, 1);

    const double best = std::max({acc_pqc, acc_dqfnn, acc_post});
    const bool dominates = (1.0 - acc_pqc) <= (1.0 - acc_base) + 1e-12 &&
                           (1.0 - acc_dqfnn) <= (1.0 - acc_base) + 1e-12 &&
                           (1.0 - acc_post) <= (1.0 - acc_base) + 1e-12;
    const double elapsed = seconds_since(t0);
    const bool pass = best >= 0.90 && dominates && elapsed < 3600.0;
    report(7, pass,
           fmt("image 3-vs-6: test acc pqc %.3f dqfnn %.3f post %.3f baseline %.3f "
               "(best >= 0.90, variants <= baseline inaccuracy), %.0fs",
               acc_pqc, acc_dqfnn, acc_post, acc_base, elapsed));
}

// --------------------------------------------------------------- criterion 10

bool valid_pgm(const std::string& path, std::vector<unsigned char>* pixels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::string magic, w, h, maxval;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w != "16" || h != "16" || maxval != "255") return false;
    in.get();
    pixels->resize(256);
    in.read(reinterpret_cast<char*>(pixels->data()), 256);
    return in.gcount() == 256;
}

void criterion_10(const std::string& images_path, const std::string& labels_path) {
    const auto t0 = std::chrono::steady_clock::now();
    namespace fs = std::filesystem;
    const IdxImages images = parse_idx_images(read_binary_file(images_path));
    const IdxLabels labels = parse_idx_labels(read_binary_file(labels_path));
    const Dataset ds = build_mnist_subset(images, labels, 10, 110);  // 20 images

    QCapsNetConfig cfg;
    cfg.total_qubits = 9;
    cfg.preprocess_depth = 3;
    cfg.primary_capsules = 3;
    cfg.qubits_per_primary = 3;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = 4;
    cfg.channel_kind = ChannelKind::DQFNN;
    cfg.channel_depth = 1;
    cfg.readout = ReadoutMode::PURITY;
    cfg.seed = 110;
    QCapsNetModel model = make_model(cfg);
    Rng drng(110);
    DecoderMLP decoder = make_decoder(256, 128, 128, 256, drng);

    ReconTrainOptions opts;
    opts.epochs = 6;
    opts.batch_size = 10;
    opts.shuffle_seed = 110;
    opts.on_epoch = [](const ReconEpochRecord& r) {
        std::fprintf(stderr, "criterion 10 epoch %zu: loss %.5f mse %.5f\n", r.epoch, r.loss,
                     r.mse);
    };
    const auto history = train_reconstruction(model, decoder, ds, opts);
    const double initial_mse = history.front().mse;
    const double final_mse = history.back().mse;

    const fs::path dir = fs::temp_directory_path() / "qcaps_acceptance_recon";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<double> thetas = default_sweep_thetas();
    bool all_valid = true;
    bool x1_moves = true, z4_moves = true;
    std::size_t emitted = 0;
    for (int cls = 0; cls < 2; ++cls) {
        const Sample* sample = nullptr;
        for (const Sample& s : ds.samples)
            if (s.label == cls) {
                sample = &s;
                break;
            }
        for (PerturbKind kind :
             {PerturbKind::X1, PerturbKind::Z4, PerturbKind::GLOBAL_Z}) {
            const auto grid = perturbation_sweep(model, decoder, *sample, kind, thetas);
            std::vector<std::vector<unsigned char>> px(thetas.size());
            for (std::size_t t = 0; t < thetas.size(); ++t) {
                const std::string path =
                    (dir / recon_filename(cls, kind, thetas[t])).string();
                write_pgm(path, grid[t]);
                ++emitted;
                if (!valid_pgm(path, &px[t])) all_valid = false;
            }
            if (kind == PerturbKind::GLOBAL_Z) continue;
            for (std::size_t t = 0; t + 1 < thetas.size(); ++t) {
                if (px[t] == px[t + 1]) {
                    (kind == PerturbKind::X1 ? x1_moves : z4_moves) = false;
                }
            }
        }
    }
    fs::remove_all(dir);
    const double elapsed = seconds_since(t0);
    const bool pass = final_mse <= 0.5 * initial_mse && all_valid && emitted == 42 &&
                      x1_moves && z4_moves;
    report(10, pass,
           fmt("reconstruction: mse %.4f -> %.4f (need <= 0.5x), %zu pgm files valid=%d, "
               "x1 sweep moves=%d z4 sweep moves=%d, %.0fs",
               initial_mse, final_mse, emitted, all_valid ? 1 : 0, x1_moves ? 1 : 0,
               z4_moves ? 1 : 0, elapsed));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "fast";
    try {
        if (mode == "fast") {
            criterion_1();
            criterion_2();
            criterion_3();
            criterion_4();
            criterion_5();
            criterion_8();
            criterion_9();
            criterion_11();
        } else if (mode == "spt") {
            criterion_6();
        } else if (mode == "mnist" || mode == "recon") {
            if (argc < 4) {
                std::fprintf(stderr, "usage: acceptance %s <images> <labels>\n", mode.c_str());
                return 2;
            }
            if (mode == "mnist") criterion_7(argv[2], argv[3]);
            else criterion_10(argv[2], argv[3]);
        } else {
            std::fprintf(stderr, "unknown mode: %s\n", mode.c_str());
            return 2;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance suite aborted: %s\n", e.what());
        return 1;
    }
    return g_failures == 0 ? 0 : 1;
}
