#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "genmix/common.hpp"
#include "genmix/mlp.hpp"

namespace genmix {

// Little-endian binary parameter blobs, magic "GMX1". Layout:
//   magic[4], version u32, n_widths u32, widths i32..., activations u32...,
//   output_activation u32, then per layer: weight matrix row-major f64,
//   bias vector f64.
namespace io {

static_assert(std::endian::native == std::endian::little,
              "parameter blobs assume a little-endian host");

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}
inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw ParseError("blob: truncated while reading u32");
    return v;
}
inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw ParseError("blob: truncated while reading u64");
    return v;
}
inline double read_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw ParseError("blob: truncated while reading f64");
    return v;
}

} // namespace io

inline void write_mlp(std::ostream& os, const MlpSpec& spec, const MlpParams& params) {
    if (!params.matches(spec)) throw UsageError("write_mlp: params do not match spec");
    os.write("GMX1", 4);
    io::write_u32(os, 1u);
    io::write_u32(os, static_cast<std::uint32_t>(spec.layer_widths.size()));
    for (int w : spec.layer_widths) io::write_u32(os, static_cast<std::uint32_t>(w));
    for (Activation a : spec.activations) io::write_u32(os, static_cast<std::uint32_t>(a));
    io::write_u32(os, static_cast<std::uint32_t>(spec.output_activation));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const Matrix& W = params.weights[l];
        os.write(reinterpret_cast<const char*>(W.data()),
                 static_cast<std::streamsize>(W.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(params.biases[l].data()),
                 static_cast<std::streamsize>(params.biases[l].size() * sizeof(double)));
    }
    if (!os) throw ParseError("write_mlp: stream write failed");
}

struct MlpBlob {
    MlpSpec spec;
    MlpParams params;
};

inline MlpBlob read_mlp(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GMX1", 4) != 0)
        throw ParseError("blob: bad magic, expected GMX1");
    std::uint32_t version = io::read_u32(is);
    if (version != 1u) throw ParseError("blob: unsupported version " + std::to_string(version));
    std::uint32_t n_widths = io::read_u32(is);
    if (n_widths < 2 || n_widths > 64) throw ParseError("blob: implausible layer count");
    MlpBlob b;
    b.spec.layer_widths.resize(n_widths);
    for (auto& w : b.spec.layer_widths) {
        w = static_cast<int>(io::read_u32(is));
        if (w < 1 || w > 1'000'000) throw ParseError("blob: implausible layer width");
    }
    b.spec.activations.resize(n_widths - 2);
    for (auto& a : b.spec.activations) {
        std::uint32_t v = io::read_u32(is);
        if (v > 1) throw ParseError("blob: unknown activation code");
        a = static_cast<Activation>(v);
    }
    {
        std::uint32_t v = io::read_u32(is);
        if (v > 1) throw ParseError("blob: unknown output activation code");
        b.spec.output_activation = static_cast<OutputActivation>(v);
    }
    b.spec.validate();
    b.params.weights.resize(b.spec.num_layers());
    b.params.biases.resize(b.spec.num_layers());
    for (std::size_t l = 0; l < b.spec.num_layers(); ++l) {
        auto rows = static_cast<std::size_t>(b.spec.layer_widths[l + 1]);
        auto cols = static_cast<std::size_t>(b.spec.layer_widths[l]);
        b.params.weights[l].resize(rows, cols);
        is.read(reinterpret_cast<char*>(b.params.weights[l].data()),
                static_cast<std::streamsize>(rows * cols * sizeof(double)));
        b.params.biases[l].resize(rows);
        is.read(reinterpret_cast<char*>(b.params.biases[l].data()),
                static_cast<std::streamsize>(rows * sizeof(double)));
        if (!is) throw ParseError("blob: truncated parameter payload");
    }
    return b;
}

} // namespace genmix
