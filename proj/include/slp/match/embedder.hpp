#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "slp/error.hpp"
#include "slp/image.hpp"
#include "slp/match/fusion.hpp"
#include "slp/nn/net.hpp"
#include "slp/rng.hpp"

namespace slp::match {

struct EmbeddingVector {
    std::string source_id;
    std::vector<double> values;  // unit length, dim 192 by default

    double norm() const {
        double s = 0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
};

struct EmbedderSpec {
    int input_size = 64;     // square canonical input edge, divisible by 16
    int base_channels = 8;
    int embedding_dim = 192;

    bool operator==(const EmbedderSpec&) const = default;
};

// Small convolutional embedder: four stride-2 blocks, then a dense map to a
// fixed-length embedding which embed() L2-normalizes.
template <typename T = float>
struct Embedder {
    EmbedderSpec spec;
    nn::Net<T> trunk;
    nn::Net<T> head;

    int trunk_dim() const {
        int side = spec.input_size / 16;
        return 8 * spec.base_channels * side * side;
    }

    void build(Rng& rng) {
        using namespace nn;
        if (spec.input_size % 16 != 0 || spec.input_size < 16)
            throw InvalidInput("embedder input_size must be a positive multiple of 16");
        const int w = spec.base_channels;
        auto& s = trunk.seq();
        const T relu = T(0);
        s.add(std::make_unique<Conv2d<T>>(1, w, 3, 2, 1, Pad::Zero, rng, "m.c1"));
        s.add(std::make_unique<InstanceNorm<T>>(w, "m.n1"));
        s.add(std::make_unique<LeakyReLU<T>>(relu));
        s.add(std::make_unique<Conv2d<T>>(w, 2 * w, 3, 2, 1, Pad::Zero, rng, "m.c2"));
        s.add(std::make_unique<InstanceNorm<T>>(2 * w, "m.n2"));
        s.add(std::make_unique<LeakyReLU<T>>(relu));
        s.add(std::make_unique<Conv2d<T>>(2 * w, 4 * w, 3, 2, 1, Pad::Zero, rng, "m.c3"));
        s.add(std::make_unique<InstanceNorm<T>>(4 * w, "m.n3"));
        s.add(std::make_unique<LeakyReLU<T>>(relu));
        s.add(std::make_unique<Conv2d<T>>(4 * w, 8 * w, 3, 2, 1, Pad::Zero, rng, "m.c4"));
        s.add(std::make_unique<InstanceNorm<T>>(8 * w, "m.n4"));
        s.add(std::make_unique<LeakyReLU<T>>(relu));
        trunk.finalize();
        head.seq().add(
            std::make_unique<nn::Dense<T>>(trunk_dim(), spec.embedding_dim, rng, "m.emb"));
        head.finalize();
    }

    void copy_weights_from(const Embedder& other) {
        if (!(spec == other.spec)) throw InvalidInput("embedder copy: spec mismatch");
        trunk.copy_weights_from(other.trunk);
        head.copy_weights_from(other.head);
    }

    nn::Tensor<T> to_input(const FingerprintImage& img) const {
        if (img.width != spec.input_size || img.height != spec.input_size)
            throw InvalidInput("embed: image " + img.id + " is " + std::to_string(img.width) +
                               "x" + std::to_string(img.height) + ", model expects " +
                               std::to_string(spec.input_size) + "x" +
                               std::to_string(spec.input_size));
        nn::Tensor<T> t(1, img.height, img.width);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            t.v[i] = T(img.pixels[i]) / T(127.5) - T(1);
        return t;
    }

    EmbeddingVector embed(const FingerprintImage& img) {
        nn::Tensor<T> e = head.forward(trunk.forward(to_input(img)));
        EmbeddingVector out;
        out.source_id = img.id;
        out.values.assign(e.v.begin(), e.v.end());
        double n2 = 0;
        for (double v : out.values) n2 += v * v;
        double inv = n2 > 0 ? 1.0 / std::sqrt(n2) : 0.0;
        for (double& v : out.values) v *= inv;
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw IoError("cannot open for write: " + path);
        std::uint32_t hdr[3] = {std::uint32_t(spec.input_size), std::uint32_t(spec.base_channels),
                                std::uint32_t(spec.embedding_dim)};
        os.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
        nn::save_weights(trunk, os);
        nn::save_weights(head, os);
    }

    static Embedder load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("cannot open: " + path);
        std::uint32_t hdr[3];
        is.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
        if (!is) throw IoError(path + ": truncated embedder file");
        Embedder e;
        e.spec.input_size = int(hdr[0]);
        e.spec.base_channels = int(hdr[1]);
        e.spec.embedding_dim = int(hdr[2]);
        Rng rng(1);
        e.build(rng);
        nn::load_weights(e.trunk, is, path);
        nn::load_weights(e.head, is, path);
        return e;
    }
};

// Cosine similarity of two unit embeddings; symmetric, in [-1, 1].
inline SimilarityScore match_score(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size())
        throw InvalidInput("match_score: embedding dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    SimilarityScore out;
    out.value = std::max(-1.0, std::min(1.0, s));
    out.probe_id = a.source_id;
    out.gallery_id = b.source_id;
    return out;
}

}  // namespace slp::match
