// Experiment runner: verification suites, the two classification experiments,
// the reconstruction/perturbation study, and the parameter sweep.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "qcaps/circuit_verify.hpp"
#include "qcaps/datasets.hpp"
#include "qcaps/model.hpp"
#include "qcaps/random_states.hpp"
#include "qcaps/reconstruction.hpp"
#include "qcaps/train.hpp"

namespace {

using namespace qcaps;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

ChannelKind parse_channel(const std::string& s) {
    if (s == "pqc") return ChannelKind::PQC;
    if (s == "dqfnn") return ChannelKind::DQFNN;
    if (s == "post_dqfnn") return ChannelKind::PostDQFNN;
    throw argument_error("unknown channel kind: " + s + " (expected pqc|dqfnn|post_dqfnn)");
}

ReadoutMode parse_readout(const std::string& s) {
    if (s == "z_mean") return ReadoutMode::Z_MEAN;
    if (s == "purity") return ReadoutMode::PURITY;
    throw argument_error("unknown readout: " + s + " (expected z_mean|purity)");
}

LossKind parse_loss(const std::string& s) {
    if (s == "cross_entropy") return LossKind::CrossEntropy;
    if (s == "margin") return LossKind::Margin;
    throw argument_error("unknown loss: " + s + " (expected cross_entropy|margin)");
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw data_error("cannot create output directory: " + out);
}

std::string path_join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void log_epoch(const EpochRecord& r) {
    std::fprintf(stderr, "epoch %zu  train loss %.6f acc %.3f  test loss %.6f acc %.3f\n",
                 r.epoch, r.train.loss, r.train.accuracy, r.test.loss, r.test.accuracy);
}

// ------------------------------------------------------------------- verify

struct VerifyArgs {
    std::uint64_t seed = 1;
    std::size_t m = 3;
    std::size_t k = 3;
    std::size_t instances = 50;
    std::size_t small_t_vectors = 20;
    bool inject_fault = false;  // negative control: perturbs the circuit omega
};

int run_verify(const VerifyArgs& a) {
    Rng rng(a.seed);
    bool ok = true;

    double max_domega = 0.0, max_dp0 = 0.0;
    for (std::size_t inst = 0; inst < a.instances; ++inst) {
        std::vector<DensityMatrix> column;
        for (std::size_t i = 0; i < a.m; ++i)
            column.push_back(random_density_matrix(rng, 2, 2));
        const DensityMatrix chi = random_density_matrix(rng, 2, 2);

        std::vector<double> omegas(a.m);
        double big_a = 0.0;
        for (std::size_t i = 0; i < a.m; ++i) {
            omegas[i] = overlap_k(column[i], chi, a.k);
            big_a += 1.0 + omegas[i];
        }
        const std::vector<double> expected_w = overlap_weights(omegas);
        const double expected_p0 = big_a / (2.0 * static_cast<double>(a.m));

        const QRamState sigma = QRamState::uniform_from_column(column, a.k);
        ComplexMatrix chi_copies = chi.matrix();
        for (std::size_t c = 1; c < a.k; ++c)
            chi_copies = tensor_product(chi_copies, chi.matrix());
        SwapTestResult res = swap_test_overlap_circuit(sigma, chi_copies, a.k);
        if (a.inject_fault) res.omega[0] += 1e-6;

        for (std::size_t i = 0; i < a.m; ++i)
            max_domega = std::max(max_domega, std::abs(res.omega[i] - expected_w[i]));
        max_dp0 = std::max(max_dp0, std::abs(res.p0 - expected_p0));
    }
    const bool swap_ok = max_domega <= 1e-10 && max_dp0 <= 1e-10;
    ok = ok && swap_ok;

    double max_rel = 0.0, worst_ratio_lo = 1e300, worst_ratio_hi = 0.0;
    for (std::size_t v = 0; v < a.small_t_vectors; ++v) {
        std::vector<double> qtilde(a.m);
        for (double& q : qtilde) q = rng.uniform(0.05, 1.0);
        const SmallTReport rep = verify_small_t_limit(qtilde, {0.01, 0.005, 0.0025});
        max_rel = std::max(max_rel, rep.entries[0].max_rel_deviation);
        for (double r : rep.halving_ratios) {
            worst_ratio_lo = std::min(worst_ratio_lo, r);
            worst_ratio_hi = std::max(worst_ratio_hi, r);
        }
    }
    const bool smallt_ok =
        max_rel <= 1e-3 && worst_ratio_lo >= 3.5 && worst_ratio_hi <= 4.5;
    ok = ok && smallt_ok;

    std::printf("check                         m  k  cases  max_deviation  tolerance  status\n");
    std::printf("swap_test_omega              %2zu %2zu %6zu  %13.3e  %9.0e  %s\n", a.m, a.k,
                a.instances, max_domega, 1e-10, swap_ok ? "pass" : "FAIL");
    std::printf("swap_test_p0                 %2zu %2zu %6zu  %13.3e  %9.0e  %s\n", a.m, a.k,
                a.instances, max_dp0, 1e-10, swap_ok ? "pass" : "FAIL");
    std::printf("small_t_rel_error            %2zu  1 %6zu  %13.3e  %9.0e  %s\n", a.m,
                a.small_t_vectors, max_rel, 1e-3, smallt_ok ? "pass" : "FAIL");
    std::printf("small_t_halving_ratio        %2zu  1 %6zu  [%.3f, %.3f]  [3.5,4.5]  %s\n", a.m,
                a.small_t_vectors, worst_ratio_lo, worst_ratio_hi, smallt_ok ? "pass" : "FAIL");
    return ok ? kExitOk : kExitVerifyFail;
}

// ---------------------------------------------------------------- train-spt

struct SptArgs {
    std::uint64_t seed = 1;
    std::string out = "out_spt";
    std::size_t n = 8;
    std::size_t train_count = 200, test_count = 40;
    double train_lo = 0.0, train_hi = 2.0;
    double test_lo = 0.8, test_hi = 1.2;
    std::size_t epochs = 40, batch_size = 16;
    std::string channel = "dqfnn";
    std::size_t depth = 1, preprocess_depth = 5;
    std::size_t capsules = 2, qpp = 3, qpd = 2;
    std::size_t k = 3, iters = 3;
    std::string readout = "z_mean", loss = "cross_entropy";
    double lr = 0.01, fd_step = 1e-3;
    std::size_t threads = 1;
    double grid_lo = 0.8, grid_hi = 1.2;
    std::size_t grid_points = 41;
};

QCapsNetConfig spt_config(const SptArgs& a) {
    QCapsNetConfig cfg;
    cfg.total_qubits = a.n;
    cfg.preprocess_depth = a.preprocess_depth;
    cfg.primary_capsules = a.capsules;
    cfg.qubits_per_primary = a.qpp;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = a.qpd;
    cfg.channel_kind = parse_channel(a.channel);
    cfg.channel_depth = a.depth;
    cfg.k = a.k;
    cfg.routing_iters = a.iters;
    cfg.readout = parse_readout(a.readout);
    cfg.seed = a.seed;
    return cfg;
}

int run_train_spt(const SptArgs& a) {
    ensure_out_dir(a.out);
    std::fprintf(stderr, "building spin-chain datasets (n=%zu)...\n", a.n);
    const Dataset train_set =
        sample_spt_dataset(a.n, a.train_count, a.train_lo, a.train_hi, a.seed);
    const Dataset test_set =
        sample_spt_dataset(a.n, a.test_count, a.test_lo, a.test_hi, a.seed + 1);

    QCapsNetModel model = make_model(spt_config(a));
    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch_size;
    opts.loss_kind = parse_loss(a.loss);
    opts.adam.lr = a.lr;
    opts.fd_step = a.fd_step;
    opts.threads = a.threads;
    opts.shuffle_seed = a.seed;
    opts.on_epoch = log_epoch;
    const TrainHistory history = train(model, train_set, test_set, opts);

    write_history_csv(history, path_join(a.out, "history.csv"));
    save_checkpoint(model, history.adam, path_join(a.out, "model.qcpt"));

    // Activation grid and crossing point.
    std::ofstream act(path_join(a.out, "activations.csv"));
    if (!act) throw data_error("cannot write activations.csv");
    act << "alpha,p0,p1\n";
    std::vector<double> alphas, diffs;
    for (std::size_t g = 0; g < a.grid_points; ++g) {
        const double alpha =
            a.grid_lo + (a.grid_hi - a.grid_lo) * static_cast<double>(g) /
                            static_cast<double>(a.grid_points - 1);
        const PureState gs = ground_state(build_cluster_ising(a.n, alpha));
        const ForwardResult fw = forward(model, gs);
        act << format_double(alpha) << ',' << format_double(fw.activations[0]) << ','
            << format_double(fw.activations[1]) << '\n';
        alphas.push_back(alpha);
        diffs.push_back(fw.activations[0] - fw.activations[1]);
    }
    std::string crossing = "none";
    for (std::size_t g = 0; g + 1 < diffs.size(); ++g) {
        if ((diffs[g] > 0.0) != (diffs[g + 1] > 0.0)) {
            const double x = alphas[g] + (alphas[g + 1] - alphas[g]) * diffs[g] /
                                             (diffs[g] - diffs[g + 1]);
            crossing = format_double(x);
            break;
        }
    }

    const EpochRecord& last = history.records.back();
    std::printf("train_inaccuracy=%s test_inaccuracy=%s crossing=%s\n",
                format_double(1.0 - last.train.accuracy).c_str(),
                format_double(1.0 - last.test.accuracy).c_str(), crossing.c_str());
    return kExitOk;
}

// -------------------------------------------------------------- train-mnist

struct MnistArgs {
    std::uint64_t seed = 1;
    std::string out = "out_mnist";
    std::string images_path, labels_path;
    std::size_t train_per_class = 100, test_per_class = 50;
    std::size_t epochs = 15, batch_size = 16;
    std::string channel = "pqc";
    std::size_t depth = 1, preprocess_depth = 5;
    std::size_t capsules = 3, qpp = 3, qpd = 3;
    std::size_t k = 3, iters = 3;
    std::string readout = "z_mean", loss = "cross_entropy";
    double lr = 0.01, fd_step = 1e-3;
    std::size_t threads = 1;
    bool baseline = false;
};

QCapsNetConfig mnist_config(const MnistArgs& a) {
    QCapsNetConfig cfg;
    cfg.total_qubits = 9;  // 256 pixels amplitude-encoded + ancilla
    cfg.preprocess_depth = a.preprocess_depth;
    cfg.primary_capsules = a.capsules;
    cfg.qubits_per_primary = a.qpp;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = a.qpd;
    cfg.channel_kind = parse_channel(a.channel);
    cfg.channel_depth = a.depth;
    cfg.k = a.k;
    cfg.routing_iters = a.iters;
    cfg.readout = parse_readout(a.readout);
    cfg.seed = a.seed;
    cfg.baseline = a.baseline;
    return cfg;
}

// One shuffled draw split into disjoint train / test parts.
std::pair<Dataset, Dataset> load_mnist_split(const MnistArgs& a) {
    const IdxImages images = parse_idx_images(read_binary_file(a.images_path));
    const IdxLabels labels = parse_idx_labels(read_binary_file(a.labels_path));
    const Dataset all =
        build_mnist_subset(images, labels, a.train_per_class + a.test_per_class, a.seed);
    Dataset train_set, test_set;
    train_set.seed = test_set.seed = a.seed;
    const std::size_t n_train = 2 * a.train_per_class;
    for (std::size_t i = 0; i < all.samples.size(); ++i)
        (i < n_train ? train_set : test_set).samples.push_back(all.samples[i]);
    return {std::move(train_set), std::move(test_set)};
}

int run_train_mnist(const MnistArgs& a) {
    ensure_out_dir(a.out);
    auto [train_set, test_set] = load_mnist_split(a);

    QCapsNetModel model = make_model(mnist_config(a));
    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch_size;
    opts.loss_kind = parse_loss(a.loss);
    opts.adam.lr = a.lr;
    opts.fd_step = a.fd_step;
    opts.threads = a.threads;
    opts.shuffle_seed = a.seed;
    opts.on_epoch = log_epoch;
    const TrainHistory history = train(model, train_set, test_set, opts);

    write_history_csv(history, path_join(a.out, "history.csv"));
    save_checkpoint(model, history.adam, path_join(a.out, "model.qcpt"));

    const EpochRecord& last = history.records.back();
    std::printf("train_inaccuracy=%s test_inaccuracy=%s\n",
                format_double(1.0 - last.train.accuracy).c_str(),
                format_double(1.0 - last.test.accuracy).c_str());
    return kExitOk;
}

// -------------------------------------------------------------- reconstruct

struct ReconArgs {
    std::uint64_t seed = 1;
    std::string out = "out_recon";
    std::string images_path, labels_path;
    std::size_t count = 20;  // total images (split evenly across the classes)
    std::size_t epochs = 8, batch_size = 8;
    std::string channel = "dqfnn";
    std::size_t depth = 1, preprocess_depth = 3;
    std::size_t capsules = 3, qpp = 3, qpd = 4;
    std::size_t k = 3, iters = 3;
    double quantum_lr = 0.01, decoder_lr = 0.01, fd_step = 1e-3;
    std::size_t threads = 1;
    bool freeze_quantum = false;
};

int run_reconstruct(const ReconArgs& a) {
    ensure_out_dir(a.out);
    const IdxImages images = parse_idx_images(read_binary_file(a.images_path));
    const IdxLabels labels = parse_idx_labels(read_binary_file(a.labels_path));
    const Dataset dataset = build_mnist_subset(images, labels, a.count / 2, a.seed);

    QCapsNetConfig cfg;
    cfg.total_qubits = 9;
    cfg.preprocess_depth = a.preprocess_depth;
    cfg.primary_capsules = a.capsules;
    cfg.qubits_per_primary = a.qpp;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = a.qpd;
    cfg.channel_kind = parse_channel(a.channel);
    cfg.channel_depth = a.depth;
    cfg.k = a.k;
    cfg.routing_iters = a.iters;
    cfg.readout = ReadoutMode::PURITY;
    cfg.seed = a.seed;
    QCapsNetModel model = make_model(cfg);

    const std::size_t features = std::size_t{1} << (2 * a.qpd);
    Rng decoder_rng(a.seed + 7);
    DecoderMLP decoder = make_decoder(features, 128, 128, 256, decoder_rng);

    ReconTrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch_size;
    opts.quantum_adam.lr = a.quantum_lr;
    opts.decoder_adam.lr = a.decoder_lr;
    opts.fd_step = a.fd_step;
    opts.threads = a.threads;
    opts.shuffle_seed = a.seed;
    opts.freeze_quantum = a.freeze_quantum;
    opts.on_epoch = [](const ReconEpochRecord& r) {
        std::fprintf(stderr, "epoch %zu  loss %.6f  margin %.6f  mse %.6f\n", r.epoch, r.loss,
                     r.margin, r.mse);
    };
    const std::vector<ReconEpochRecord> history =
        train_reconstruction(model, decoder, dataset, opts);

    std::ofstream csv(path_join(a.out, "recon_history.csv"));
    if (!csv) throw data_error("cannot write recon_history.csv");
    csv << "epoch,loss,margin,mse\n";
    for (const ReconEpochRecord& r : history)
        csv << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.margin) << ','
            << format_double(r.mse) << '\n';

    // Perturbation sweep for the first sample of each class.
    const std::vector<double> thetas = default_sweep_thetas();
    for (int cls = 0; cls < 2; ++cls) {
        const Sample* sample = nullptr;
        for (const Sample& s : dataset.samples)
            if (s.label == cls) {
                sample = &s;
                break;
            }
        if (!sample) continue;
        for (PerturbKind kind :
             {PerturbKind::X1, PerturbKind::Z4, PerturbKind::GLOBAL_Z}) {
            const auto grid = perturbation_sweep(model, decoder, *sample, kind, thetas);
            for (std::size_t t = 0; t < thetas.size(); ++t)
                write_pgm(path_join(a.out, recon_filename(cls, kind, thetas[t])), grid[t]);
        }
    }

    std::printf("initial_mse=%s final_mse=%s\n", format_double(history.front().mse).c_str(),
                format_double(history.back().mse).c_str());
    return kExitOk;
}

// ------------------------------------------------------------- sweep-params

struct SweepArgs {
    std::uint64_t seed = 1;
    std::string out = "out_sweep";
    std::string images_path, labels_path;
    std::size_t train_per_class = 100, test_per_class = 50;
    std::vector<std::size_t> depths = {1};
    std::size_t epochs = 15, batch_size = 16;
    std::size_t preprocess_depth = 5;
    double lr = 0.01, fd_step = 1e-3;
    std::size_t threads = 1;
};

int run_sweep(const SweepArgs& a) {
    ensure_out_dir(a.out);
    MnistArgs base;
    base.seed = a.seed;
    base.images_path = a.images_path;
    base.labels_path = a.labels_path;
    base.train_per_class = a.train_per_class;
    base.test_per_class = a.test_per_class;
    base.preprocess_depth = a.preprocess_depth;
    auto [train_set, test_set] = load_mnist_split(base);

    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch_size;
    opts.adam.lr = a.lr;
    opts.fd_step = a.fd_step;
    opts.threads = a.threads;
    opts.shuffle_seed = a.seed;

    std::ofstream csv(path_join(a.out, "sweep.csv"));
    if (!csv) throw data_error("cannot write sweep.csv");
    csv << "variant,depth,param_count,train_inacc,test_inacc\n";

    auto run_one = [&](const std::string& variant, QCapsNetConfig cfg, std::size_t depth_col) {
        QCapsNetModel model = make_model(cfg);
        std::fprintf(stderr, "sweep: %s depth %zu (%zu params)\n", variant.c_str(), depth_col,
                     model.parameter_count());
        const TrainHistory history = train(model, train_set, test_set, opts);
        const EpochRecord& last = history.records.back();
        csv << variant << ',' << depth_col << ',' << model.parameter_count() << ','
            << format_double(1.0 - last.train.accuracy) << ','
            << format_double(1.0 - last.test.accuracy) << '\n';
        return model.parameter_count();
    };

    std::vector<std::size_t> baseline_depths;
    for (std::size_t depth : a.depths) {
        std::size_t total_params = 0, variants = 0;
        for (const std::string variant : {"pqc", "dqfnn", "post_dqfnn"}) {
            MnistArgs margs = base;
            margs.channel = variant;
            margs.depth = depth;
            total_params += run_one(variant, mnist_config(margs), depth);
            ++variants;
        }
        // Parameter-matched baseline: all parameters live in the preprocessing
        // circuit (27 per layer on 9 qubits).
        const std::size_t matched = std::max<std::size_t>(
            1, (total_params / variants + 13) / 27);
        if (std::find(baseline_depths.begin(), baseline_depths.end(), matched) ==
            baseline_depths.end()) {
            baseline_depths.push_back(matched);
            MnistArgs margs = base;
            margs.baseline = true;
            margs.preprocess_depth = matched;
            run_one("baseline", mnist_config(margs), matched);
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"density-matrix simulator and trainer for quantum capsule networks"};
    app.require_subcommand(1);

    VerifyArgs va;
    CLI::App* verify = app.add_subcommand("verify", "circuit-vs-analytic verification suite");
    verify->set_config("--config");
    verify->add_option("--seed", va.seed, "rng seed")->required();
    verify->add_option("--m", va.m, "capsules per column");
    verify->add_option("--k", va.k, "moment order");
    verify->add_option("--instances", va.instances, "swap-test instances");
    verify->add_option("--small-t-vectors", va.small_t_vectors, "assignment-limit vectors");
    verify->add_flag("--inject-fault", va.inject_fault, "negative control: force a failure");

    SptArgs sa;
    CLI::App* spt = app.add_subcommand("train-spt", "train on cluster-Ising ground states");
    spt->set_config("--config");
    spt->add_option("--seed", sa.seed, "rng seed")->required();
    spt->add_option("--out", sa.out, "output directory");
    spt->add_option("--n", sa.n, "spins");
    spt->add_option("--train-count", sa.train_count);
    spt->add_option("--test-count", sa.test_count);
    spt->add_option("--train-lo", sa.train_lo);
    spt->add_option("--train-hi", sa.train_hi);
    spt->add_option("--test-lo", sa.test_lo);
    spt->add_option("--test-hi", sa.test_hi);
    spt->add_option("--epochs", sa.epochs);
    spt->add_option("--batch-size", sa.batch_size);
    spt->add_option("--channel", sa.channel, "pqc|dqfnn|post_dqfnn");
    spt->add_option("--depth", sa.depth);
    spt->add_option("--preprocess-depth", sa.preprocess_depth);
    spt->add_option("--capsules", sa.capsules);
    spt->add_option("--qpp", sa.qpp, "qubits per primary capsule");
    spt->add_option("--qpd", sa.qpd, "qubits per digit capsule");
    spt->add_option("--k", sa.k);
    spt->add_option("--iters", sa.iters);
    spt->add_option("--readout", sa.readout, "z_mean|purity");
    spt->add_option("--loss", sa.loss, "cross_entropy|margin");
    spt->add_option("--lr", sa.lr);
    spt->add_option("--fd-step", sa.fd_step);
    spt->add_option("--threads", sa.threads);
    spt->add_option("--grid-lo", sa.grid_lo);
    spt->add_option("--grid-hi", sa.grid_hi);
    spt->add_option("--grid-points", sa.grid_points);

    MnistArgs ma;
    CLI::App* mnist = app.add_subcommand("train-mnist", "train on the 3-vs-6 image subset");
    mnist->set_config("--config");
    mnist->add_option("--seed", ma.seed, "rng seed")->required();
    mnist->add_option("--out", ma.out, "output directory");
    mnist->add_option("--mnist-images", ma.images_path, "IDX image file")->required();
    mnist->add_option("--mnist-labels", ma.labels_path, "IDX label file")->required();
    mnist->add_option("--train-per-class", ma.train_per_class);
    mnist->add_option("--test-per-class", ma.test_per_class);
    mnist->add_option("--epochs", ma.epochs);
    mnist->add_option("--batch-size", ma.batch_size);
    mnist->add_option("--channel", ma.channel, "pqc|dqfnn|post_dqfnn");
    mnist->add_option("--depth", ma.depth);
    mnist->add_option("--preprocess-depth", ma.preprocess_depth);
    mnist->add_option("--capsules", ma.capsules);
    mnist->add_option("--qpp", ma.qpp);
    mnist->add_option("--qpd", ma.qpd);
    mnist->add_option("--k", ma.k);
    mnist->add_option("--iters", ma.iters);
    mnist->add_option("--readout", ma.readout, "z_mean|purity");
    mnist->add_option("--loss", ma.loss, "cross_entropy|margin");
    mnist->add_option("--lr", ma.lr);
    mnist->add_option("--fd-step", ma.fd_step);
    mnist->add_option("--threads", ma.threads);
    mnist->add_flag("--baseline", ma.baseline, "no-capsule comparison preset");

    ReconArgs ra;
    CLI::App* recon = app.add_subcommand("reconstruct", "reconstruction + perturbation sweeps");
    recon->set_config("--config");
    recon->add_option("--seed", ra.seed, "rng seed")->required();
    recon->add_option("--out", ra.out, "output directory");
    recon->add_option("--mnist-images", ra.images_path, "IDX image file")->required();
    recon->add_option("--mnist-labels", ra.labels_path, "IDX label file")->required();
    recon->add_option("--count", ra.count, "total images");
    recon->add_option("--epochs", ra.epochs);
    recon->add_option("--batch-size", ra.batch_size);
    recon->add_option("--channel", ra.channel, "pqc|dqfnn|post_dqfnn");
    recon->add_option("--depth", ra.depth);
    recon->add_option("--preprocess-depth", ra.preprocess_depth);
    recon->add_option("--capsules", ra.capsules);
    recon->add_option("--qpp", ra.qpp);
    recon->add_option("--qpd", ra.qpd, "qubits per digit capsule (4 for the 256-feature decoder)");
    recon->add_option("--k", ra.k);
    recon->add_option("--iters", ra.iters);
    recon->add_option("--quantum-lr", ra.quantum_lr);
    recon->add_option("--decoder-lr", ra.decoder_lr);
    recon->add_option("--fd-step", ra.fd_step);
    recon->add_option("--threads", ra.threads);
    recon->add_flag("--freeze-quantum", ra.freeze_quantum, "train the decoder only");

    SweepArgs wa;
    CLI::App* sweep = app.add_subcommand("sweep-params", "channel/depth sweep + baseline");
    sweep->set_config("--config");
    sweep->add_option("--seed", wa.seed, "rng seed")->required();
    sweep->add_option("--out", wa.out, "output directory");
    sweep->add_option("--mnist-images", wa.images_path, "IDX image file")->required();
    sweep->add_option("--mnist-labels", wa.labels_path, "IDX label file")->required();
    sweep->add_option("--train-per-class", wa.train_per_class);
    sweep->add_option("--test-per-class", wa.test_per_class);
    sweep->add_option("--depths", wa.depths, "channel depths to sweep");
    sweep->add_option("--epochs", wa.epochs);
    sweep->add_option("--batch-size", wa.batch_size);
    sweep->add_option("--preprocess-depth", wa.preprocess_depth);
    sweep->add_option("--lr", wa.lr);
    sweep->add_option("--fd-step", wa.fd_step);
    sweep->add_option("--threads", wa.threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (verify->parsed()) return run_verify(va);
        if (spt->parsed()) return run_train_spt(sa);
        if (mnist->parsed()) return run_train_mnist(ma);
        if (recon->parsed()) return run_reconstruct(ra);
        if (sweep->parsed()) return run_sweep(wa);
        std::fprintf(stderr, "no subcommand selected\n");
        return kExitUsage;
    } catch (const argument_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const parse_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const data_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}
