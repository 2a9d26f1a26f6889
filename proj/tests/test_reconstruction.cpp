#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "qcaps/random_states.hpp"
#include "qcaps/reconstruction.hpp"

using namespace qcaps;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("tomography of reference states") {
    // Maximally mixed: only the identity component survives.
    const auto mm = tomography_vector(DensityMatrix::maximally_mixed(4));
    REQUIRE(mm.size() == 16);
    REQUIRE(mm[0] == Catch::Approx(1.0).margin(1e-12));
    for (std::size_t i = 1; i < 16; ++i) REQUIRE(mm[i] == Catch::Approx(0.0).margin(1e-12));

    // |0><0| on one qubit: (I, X, Y, Z) -> (1, 0, 0, 1).
    const auto zero = tomography_vector(DensityMatrix::pure(PureState::basis(2, 0)));
    REQUIRE(zero[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(zero[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(zero[2] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(zero[3] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("tomography components stay in [-1, 1]") {
    Rng rng(3);
    const auto f = tomography_vector(random_density_matrix(rng, 8, 3));
    for (double c : f) {
        REQUIRE(c >= -1.0 - 1e-12);
        REQUIRE(c <= 1.0 + 1e-12);
    }
}

TEST_CASE("tomography round trips through the inverse map") {
    Rng rng(5);
    for (std::size_t n : {1, 2, 3}) {
        const DensityMatrix chi = random_density_matrix(rng, std::size_t{1} << n, 2);
        const DensityMatrix back = density_from_tomography(tomography_vector(chi), n);
        REQUIRE(max_abs_diff(chi.matrix(), back.matrix()) < 1e-10);
    }
    REQUIRE_THROWS_AS(density_from_tomography(std::vector<double>(5, 0.0), 1), argument_error);
}

TEST_CASE("decoder with zero weights outputs 0.5 everywhere") {
    DecoderMLP d;
    d.in = 16;
    d.h1 = 4;
    d.h2 = 4;
    d.out = 8;
    d.w1.assign(4 * 16, 0.0);
    d.b1.assign(4, 0.0);
    d.w2.assign(16, 0.0);
    d.b2.assign(4, 0.0);
    d.w3.assign(32, 0.0);
    d.b3.assign(8, 0.0);
    const auto out = decoder_forward(d, std::vector<double>(16, 0.3));
    for (double v : out) REQUIRE(v == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("decoder single active path matches the hand computation") {
    DecoderMLP d;
    d.in = 2;
    d.h1 = 1;
    d.h2 = 1;
    d.out = 1;
    d.w1 = {2.0, 0.0};
    d.b1 = {0.0};
    d.w2 = {0.5};
    d.b2 = {0.1};
    d.w3 = {-1.0};
    d.b3 = {0.3};
    // x = (0.4, 9.9): a1 = relu(0.8) = 0.8, a2 = relu(0.5); o = sigmoid(-0.2).
    const auto out = decoder_forward(d, {0.4, 9.9});
    REQUIRE(out[0] == Catch::Approx(1.0 / (1.0 + std::exp(0.2))).margin(1e-14));
}

TEST_CASE("decoder outputs lie strictly inside (0, 1)") {
    Rng rng(7);
    DecoderMLP d = make_decoder(16, 8, 8, 12, rng);
    std::vector<double> x(16);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double v : decoder_forward(d, x)) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("decoder backprop matches finite differences") {
    Rng rng(11);
    DecoderMLP d = make_decoder(6, 5, 4, 3, rng);
    std::vector<double> x(6), target(3);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : target) v = rng.uniform(0.0, 1.0);

    DecoderTrace trace;
    decoder_forward(d, x, &trace);
    std::vector<double> analytic(d.parameter_count(), 0.0);
    decoder_backprop_mse(d, x, trace, target, 1.0, analytic);

    auto loss_of = [&](const std::vector<double>& params) {
        DecoderMLP probe = d;
        decoder_set_flat_params(probe, params);
        return mse_loss(decoder_forward(probe, x), target);
    };
    const std::vector<double> numeric =
        grad_finite_diff(decoder_flat_params(d), loss_of, 1e-5);
    for (std::size_t i = 0; i < analytic.size(); ++i)
        REQUIRE(analytic[i] == Catch::Approx(numeric[i]).margin(1e-7));
}

TEST_CASE("perturbations at theta 0 are identities") {
    Rng rng(13);
    const DensityMatrix chi = random_density_matrix(rng, 16, 3);
    for (PerturbKind kind : {PerturbKind::X1, PerturbKind::Z4, PerturbKind::GLOBAL_Z})
        REQUIRE(max_abs_diff(perturb_capsule(chi, kind, 0.0).matrix(), chi.matrix()) < 1e-12);
}

TEST_CASE("X1 at pi/2 flips the first qubit of |0000>") {
    const DensityMatrix chi = DensityMatrix::pure(PureState::basis(16, 0));
    const DensityMatrix out = perturb_capsule(chi, PerturbKind::X1, M_PI / 2.0);
    // e^{-i pi/2 X} = -iX: |0000> -> |1000> up to phase.
    REQUIRE(std::abs(out.matrix()(8, 8) - cplx(1.0)) < 1e-12);
    REQUIRE(std::abs(out.matrix()(0, 0)) < 1e-12);
}

TEST_CASE("diagonal perturbations leave computational basis states fixed") {
    const DensityMatrix chi = DensityMatrix::pure(PureState::basis(16, 0b1010));
    for (PerturbKind kind : {PerturbKind::Z4, PerturbKind::GLOBAL_Z})
        REQUIRE(max_abs_diff(perturb_capsule(chi, kind, 0.37).matrix(), chi.matrix()) < 1e-12);
}

TEST_CASE("perturbations preserve every purity order") {
    Rng rng(17);
    const DensityMatrix chi = random_density_matrix(rng, 16, 4);
    for (PerturbKind kind : {PerturbKind::X1, PerturbKind::Z4, PerturbKind::GLOBAL_Z}) {
        const DensityMatrix out = perturb_capsule(chi, kind, 0.11);
        for (std::size_t k : {1, 2, 3})
            REQUIRE(purity_k(out, k) == Catch::Approx(purity_k(chi, k)).margin(1e-9));
    }
}

TEST_CASE("Z4 and GLOBAL_Z require four qubits") {
    Rng rng(19);
    const DensityMatrix small = random_density_matrix(rng, 4, 2);
    REQUIRE_THROWS_AS(perturb_capsule(small, PerturbKind::Z4, 0.1), argument_error);
    REQUIRE(perturb_capsule(small, PerturbKind::X1, 0.1).dim() == 4);
}

TEST_CASE("X1 matches the dense exponential oracle") {
    Rng rng(23);
    const DensityMatrix chi = random_density_matrix(rng, 16, 2);
    const double theta = 0.42;
    // U = cos(theta) I - i sin(theta) X on qubit 0, built densely.
    ComplexMatrix u = tensor_product(
        add(scale(ComplexMatrix::identity(2), std::cos(theta)),
            scale(pauli_x(), cplx(0.0, -std::sin(theta)))),
        ComplexMatrix::identity(8));
    const ComplexMatrix want = matmul(u, matmul(chi.matrix(), dagger(u)));
    REQUIRE(max_abs_diff(perturb_capsule(chi, PerturbKind::X1, theta).matrix(), want) < 1e-12);
}

TEST_CASE("default sweep has seven thetas from -0.2 to 0.2") {
    const auto thetas = default_sweep_thetas();
    REQUIRE(thetas.size() == 7);
    REQUIRE(thetas.front() == Catch::Approx(-0.2).margin(1e-12));
    REQUIRE(thetas.back() == Catch::Approx(0.2).margin(1e-12));
    for (std::size_t i = 0; i + 1 < thetas.size(); ++i)
        REQUIRE(thetas[i + 1] - thetas[i] == Catch::Approx(0.4 / 6.0).margin(1e-12));
}

TEST_CASE("pgm writer emits a valid P5 file") {
    std::vector<double> pixels(256, 0.0);
    pixels[0] = 1.0;
    pixels[1] = 0.5;
    pixels[2] = -3.0;  // clamped
    pixels[3] = 7.0;   // clamped
    const std::string path = temp_path("qcaps_test.pgm");
    write_pgm(path, pixels);
    std::ifstream in(path, std::ios::binary);
    std::string magic, dims1, dims2, maxval;
    in >> magic >> dims1 >> dims2 >> maxval;
    REQUIRE(magic == "P5");
    REQUIRE(dims1 == "16");
    REQUIRE(dims2 == "16");
    REQUIRE(maxval == "255");
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> data(256);
    in.read(reinterpret_cast<char*>(data.data()), 256);
    REQUIRE(in.gcount() == 256);
    REQUIRE(data[0] == 255);
    REQUIRE(data[1] == 128);
    REQUIRE(data[2] == 0);
    REQUIRE(data[3] == 255);
    std::filesystem::remove(path);
}

TEST_CASE("reconstruction filenames follow the documented pattern") {
    REQUIRE(recon_filename(0, PerturbKind::X1, -0.2) == "recon_0_x1_-200.pgm");
    REQUIRE(recon_filename(1, PerturbKind::Z4, 0.14) == "recon_1_z4_140.pgm");
    REQUIRE(recon_filename(1, PerturbKind::GLOBAL_Z, 0.0) == "recon_1_global_z_0.pgm");
}

TEST_CASE("decoder-only training reduces reconstruction mse") {
    // Frozen quantum part, 6 samples with fixed pixels.
    QCapsNetConfig cfg;
    cfg.total_qubits = 4;
    cfg.preprocess_depth = 1;
    cfg.primary_capsules = 2;
    cfg.qubits_per_primary = 2;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = 2;
    cfg.channel_kind = ChannelKind::PQC;
    cfg.channel_depth = 1;
    cfg.readout = ReadoutMode::PURITY;
    cfg.seed = 29;
    QCapsNetModel model = make_model(cfg);

    Rng rng(31);
    Dataset ds;
    for (int i = 0; i < 6; ++i) {
        Sample s;
        s.state = random_pure_state(rng, 16);
        s.label = i % 2;
        s.pixels.resize(256);
        for (double& p : s.pixels) p = rng.uniform(0.0, 1.0);
        ds.samples.push_back(std::move(s));
    }
    Rng drng(37);
    DecoderMLP decoder = make_decoder(16, 32, 32, 256, drng);

    ReconTrainOptions opts;
    opts.epochs = 10;
    opts.batch_size = 3;
    opts.freeze_quantum = true;
    opts.shuffle_seed = 41;
    const auto history = train_reconstruction(model, decoder, ds, opts);
    REQUIRE(history.front().epoch == 0);
    REQUIRE(history.back().mse < history.front().mse);
}

TEST_CASE("zero-epoch reconstruction training changes nothing") {
    QCapsNetConfig cfg;
    cfg.total_qubits = 4;
    cfg.preprocess_depth = 1;
    cfg.primary_capsules = 2;
    cfg.qubits_per_primary = 2;
    cfg.digit_capsules = 2;
    cfg.qubits_per_digit = 2;
    cfg.seed = 43;
    QCapsNetModel model = make_model(cfg);
    Rng drng(47);
    DecoderMLP decoder = make_decoder(16, 4, 4, 256, drng);
    const auto before_q = model.flat_params();
    const auto before_d = decoder_flat_params(decoder);
    Rng rng(53);
    Dataset ds;
    Sample s;
    s.state = random_pure_state(rng, 16);
    s.pixels.assign(256, 0.5);
    ds.samples.push_back(std::move(s));
    ReconTrainOptions opts;
    opts.epochs = 0;
    const auto history = train_reconstruction(model, decoder, ds, opts);
    REQUIRE(history.size() == 1);
    REQUIRE(model.flat_params() == before_q);
    REQUIRE(decoder_flat_params(decoder) == before_d);
}
