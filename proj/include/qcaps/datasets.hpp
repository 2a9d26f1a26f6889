#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "qcaps/density.hpp"
#include "qcaps/eig.hpp"
#include "qcaps/errors.hpp"
#include "qcaps/rng.hpp"

namespace qcaps {

// ---------------------------------------------------------------- IDX files

struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
};

struct IdxLabels {
    std::vector<std::uint8_t> labels;
};

namespace detail {

inline std::uint32_t read_be_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
    if (off + 4 > b.size())
        throw parse_error("idx: truncated header at byte offset " + std::to_string(off));
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

inline void write_be_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(std::uint8_t(v >> 24));
    b.push_back(std::uint8_t(v >> 16));
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v));
}

}  // namespace detail

inline IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = detail::read_be_u32(bytes, 0);
    if (magic != 0x00000803)
        throw parse_error("idx: bad image magic at byte offset 0 (expected 0x00000803)");
    IdxImages out;
    out.count = detail::read_be_u32(bytes, 4);
    out.rows = detail::read_be_u32(bytes, 8);
    out.cols = detail::read_be_u32(bytes, 12);
    const std::size_t need = 16 + std::size_t(out.count) * out.rows * out.cols;
    if (bytes.size() < need)
        throw parse_error("idx: truncated image payload, have " + std::to_string(bytes.size()) +
                          " bytes, need " + std::to_string(need));
    out.pixels.assign(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(need));
    return out;
}

inline IdxLabels parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = detail::read_be_u32(bytes, 0);
    if (magic != 0x00000801)
        throw parse_error("idx: bad label magic at byte offset 0 (expected 0x00000801)");
    const std::uint32_t count = detail::read_be_u32(bytes, 4);
    const std::size_t need = 8 + count;
    if (bytes.size() < need)
        throw parse_error("idx: truncated label payload, have " + std::to_string(bytes.size()) +
                          " bytes, need " + std::to_string(need));
    IdxLabels out;
    out.labels.assign(bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(need));
    return out;
}

inline std::vector<std::uint8_t> serialize_idx_images(const IdxImages& img) {
    std::vector<std::uint8_t> out;
    detail::write_be_u32(out, 0x00000803);
    detail::write_be_u32(out, img.count);
    detail::write_be_u32(out, img.rows);
    detail::write_be_u32(out, img.cols);
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const IdxLabels& lab) {
    std::vector<std::uint8_t> out;
    detail::write_be_u32(out, 0x00000801);
    detail::write_be_u32(out, std::uint32_t(lab.labels.size()));
    out.insert(out.end(), lab.labels.begin(), lab.labels.end());
    return out;
}

// Reads a file, transparently inflating gzip content.
inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
        z_stream zs{};
        if (inflateInit2(&zs, 15 + 16) != Z_OK) throw data_error("gzip: inflateInit failed");
        std::vector<std::uint8_t> out;
        std::uint8_t buf[1 << 16];
        zs.next_in = bytes.data();
        zs.avail_in = static_cast<uInt>(bytes.size());
        int rc = Z_OK;
        do {
            zs.next_out = buf;
            zs.avail_out = sizeof(buf);
            rc = inflate(&zs, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END) {
                inflateEnd(&zs);
                throw data_error("gzip: inflate failed for " + path);
            }
            out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
        } while (rc != Z_STREAM_END);
        inflateEnd(&zs);
        return out;
    }
    return bytes;
}

// ------------------------------------------------------------- downscaling

// Bilinear 28x28 -> 16x16 with pixel-center alignment (exact on affine
// fields away from clamping, which the 28->16 geometry never triggers).
inline std::vector<double> downscale_16(const std::vector<double>& image28) {
    if (image28.size() != 28 * 28) throw argument_error("downscale_16: input must be 28x28");
    std::vector<double> out(16 * 16);
    const double scale = 28.0 / 16.0;
    for (std::size_t y = 0; y < 16; ++y) {
        const double sy = (static_cast<double>(y) + 0.5) * scale - 0.5;
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const double fy = sy - static_cast<double>(y0);
        const std::size_t y1 = std::min<std::size_t>(y0 + 1, 27);
        for (std::size_t x = 0; x < 16; ++x) {
            const double sx = (static_cast<double>(x) + 0.5) * scale - 0.5;
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const double fx = sx - static_cast<double>(x0);
            const std::size_t x1 = std::min<std::size_t>(x0 + 1, 27);
            out[y * 16 + x] = (1.0 - fy) * ((1.0 - fx) * image28[y0 * 28 + x0] +
                                            fx * image28[y0 * 28 + x1]) +
                              fy * ((1.0 - fx) * image28[y1 * 28 + x0] +
                                    fx * image28[y1 * 28 + x1]);
        }
    }
    return out;
}

// -------------------------------------------------------- cluster-Ising ED

// H(alpha) = -sum_j X_{j-1} Z_j X_{j+1} + alpha sum_j Y_j Y_{j+1}, periodic.
// Built by direct bit arithmetic; all matrix elements are real.
inline Observable build_cluster_ising(std::size_t n, double alpha) {
    if (n < 3) throw argument_error("build_cluster_ising: need n >= 3");
    if (n > 12) throw size_error("build_cluster_ising: n above configured cap of 12");
    const std::size_t dim = std::size_t{1} << n;
    ComplexMatrix h(dim, dim);
    auto bit_mask = [n](std::size_t q) { return std::size_t{1} << (n - 1 - q); };

    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t jm = (j + n - 1) % n;
        const std::size_t jp = (j + 1) % n;
        const std::size_t flip_xzx = bit_mask(jm) | bit_mask(jp);
        const std::size_t flip_yy = bit_mask(j) | bit_mask(jp);
        for (std::size_t b = 0; b < dim; ++b) {
            // -X_{j-1} Z_j X_{j+1}
            const double zsign = (b & bit_mask(j)) ? -1.0 : 1.0;
            h(b ^ flip_xzx, b) += -zsign;
            // alpha * Y_j Y_{j+1}: Y|b> = i(-1)^b |1-b>
            const double ysign =
                -1.0 * (((b & bit_mask(j)) ? -1.0 : 1.0) * ((b & bit_mask(jp)) ? -1.0 : 1.0));
            h(b ^ flip_yy, b) += alpha * ysign;
        }
    }
    return Observable(std::move(h));
}

// Minimal-eigenvalue eigenvector; on near-degeneracy the solver's fixed
// ascending ordering makes the selection deterministic.
inline PureState ground_state(const Observable& h) {
    const EigenSystem es = hermitian_eigensystem(h.matrix);
    const std::size_t dim = h.matrix.rows;
    std::vector<cplx> amps(dim);
    double n2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        amps[i] = es.eigenvectors(i, 0);
        n2 += std::norm(amps[i]);
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (cplx& a : amps) a *= inv;
    return PureState(dim, std::move(amps));
}

// ---------------------------------------------------------------- datasets

struct Sample {
    PureState state;
    int label = 0;              // class index
    double alpha = 0.0;         // spin-chain coupling (spin samples only)
    std::vector<double> pixels; // 16x16 intensities (image samples only)
};

struct Dataset {
    std::vector<Sample> samples;
    std::uint64_t seed = 0;
};

inline Dataset sample_spt_dataset(std::size_t n, std::size_t count, double alpha_lo,
                                  double alpha_hi, std::uint64_t seed) {
    if (alpha_lo >= alpha_hi) throw argument_error("sample_spt_dataset: lo >= hi");
    Dataset ds;
    ds.seed = seed;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        Sample s;
        s.alpha = rng.uniform(alpha_lo, alpha_hi);
        s.label = s.alpha < 1.0 ? 0 : 1;
        s.state = ground_state(build_cluster_ising(n, s.alpha));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// Filter to labels {3, 6}, shuffle deterministically, downscale to 16x16,
// amplitude-encode, and append one ancilla qubit in |0>.
inline Dataset build_mnist_subset(const IdxImages& images, const IdxLabels& labels,
                                  std::size_t count_per_class, std::uint64_t seed) {
    if (images.count != labels.labels.size())
        throw parse_error("mnist: image/label count mismatch: " + std::to_string(images.count) +
                          " images vs " + std::to_string(labels.labels.size()) + " labels");
    if (images.rows != 28 || images.cols != 28)
        throw data_error("mnist: expected 28x28 images");

    std::vector<std::size_t> idx3, idx6;
    for (std::size_t i = 0; i < images.count; ++i) {
        if (labels.labels[i] == 3) idx3.push_back(i);
        if (labels.labels[i] == 6) idx6.push_back(i);
    }
    if (idx3.size() < count_per_class || idx6.size() < count_per_class)
        throw data_error("mnist: insufficient source images for requested subset");

    Rng rng(seed);
    auto shuffle = [&rng](auto& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[rng.uniform_index(i)]);
    };
    shuffle(idx3);
    shuffle(idx6);

    std::vector<std::pair<std::size_t, int>> picks;
    for (std::size_t i = 0; i < count_per_class; ++i) {
        picks.emplace_back(idx3[i], 0);
        picks.emplace_back(idx6[i], 1);
    }
    shuffle(picks);

    Dataset ds;
    ds.seed = seed;
    for (const auto& [src, cls] : picks) {
        std::vector<double> img28(28 * 28);
        const std::uint8_t* px = &images.pixels[src * 28 * 28];
        for (std::size_t p = 0; p < 28 * 28; ++p) img28[p] = static_cast<double>(px[p]) / 255.0;
        Sample s;
        s.pixels = downscale_16(img28);
        s.label = cls;
        const PureState encoded = amplitude_encode(s.pixels);
        // Ancilla appended as the least significant qubit, in |0>.
        std::vector<cplx> amps(encoded.dim * 2, 0.0);
        for (std::size_t i = 0; i < encoded.dim; ++i) amps[2 * i] = encoded.amplitudes[i];
        s.state = PureState(encoded.dim * 2, std::move(amps));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// -------------------------------------------------------- QCDS cache files

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw parse_error("qcds: truncated record");
    return v;
}

}  // namespace detail

// Versioned binary dataset container (magic "QCDS").
inline void write_dataset_cache(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("qcds: cannot open for writing: " + path);
    out.write("QCDS", 4);
    detail::write_pod<std::uint32_t>(out, 1);  // format version
    detail::write_pod<std::uint64_t>(out, ds.seed);
    detail::write_pod<std::uint32_t>(out, std::uint32_t(ds.samples.size()));
    for (const Sample& s : ds.samples) {
        detail::write_pod<std::int32_t>(out, s.label);
        detail::write_pod<double>(out, s.alpha);
        detail::write_pod<std::uint32_t>(out, std::uint32_t(s.pixels.size()));
        for (double p : s.pixels) detail::write_pod<double>(out, p);
        detail::write_pod<std::uint32_t>(out, std::uint32_t(s.state.dim));
        for (const cplx& a : s.state.amplitudes) {
            detail::write_pod<double>(out, a.real());
            detail::write_pod<double>(out, a.imag());
        }
    }
}

inline Dataset read_dataset_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("qcds: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "QCDS", 4) != 0)
        throw parse_error("qcds: bad magic at byte offset 0");
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != 1) throw parse_error("qcds: unsupported format version");
    Dataset ds;
    ds.seed = detail::read_pod<std::uint64_t>(in);
    const auto count = detail::read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        Sample s;
        s.label = detail::read_pod<std::int32_t>(in);
        s.alpha = detail::read_pod<double>(in);
        const auto npix = detail::read_pod<std::uint32_t>(in);
        s.pixels.resize(npix);
        for (auto& p : s.pixels) p = detail::read_pod<double>(in);
        const auto dim = detail::read_pod<std::uint32_t>(in);
        std::vector<cplx> amps(dim);
        for (auto& a : amps) {
            const double re = detail::read_pod<double>(in);
            const double im = detail::read_pod<double>(in);
            a = cplx(re, im);
        }
        s.state = PureState(dim, std::move(amps));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace qcaps
