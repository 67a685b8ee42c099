#pragma once

#include <memory>
#include <string>

#include "slp/nn/net.hpp"
#include "slp/rng.hpp"

namespace slp::gan {

// Encoder-decoder generator topology: 7x7 stem, two stride-2 downsamplers,
// a residual trunk, two fractionally strided upsamplers, 7x7 head with tanh.
// Single-channel in and out.
struct GeneratorSpec {
    int residual_blocks = 6;
    double leaky_slope = 0.2;
    int base_channels = 64;

    bool operator==(const GeneratorSpec&) const = default;
};

struct DiscriminatorSpec {
    int base_channels = 64;

    bool operator==(const DiscriminatorSpec&) const = default;
};

template <typename T>
void build_generator(nn::Net<T>& net, const GeneratorSpec& spec, Rng& rng) {
    using namespace nn;
    const int w = spec.base_channels;
    const T a = T(spec.leaky_slope);
    auto& s = net.seq();
    s.add(std::make_unique<Conv2d<T>>(1, w, 7, 1, 3, Pad::Reflect, rng, "g.stem"));
    s.add(std::make_unique<InstanceNorm<T>>(w, "g.stem_n"));
    s.add(std::make_unique<LeakyReLU<T>>(a));
    s.add(std::make_unique<Conv2d<T>>(w, 2 * w, 3, 2, 1, Pad::Zero, rng, "g.down1"));
    s.add(std::make_unique<InstanceNorm<T>>(2 * w, "g.down1_n"));
    s.add(std::make_unique<LeakyReLU<T>>(a));
    s.add(std::make_unique<Conv2d<T>>(2 * w, 4 * w, 3, 2, 1, Pad::Zero, rng, "g.down2"));
    s.add(std::make_unique<InstanceNorm<T>>(4 * w, "g.down2_n"));
    s.add(std::make_unique<LeakyReLU<T>>(a));
    for (int i = 0; i < spec.residual_blocks; ++i)
        s.add(std::make_unique<ResidualBlock<T>>(4 * w, rng, "g.res" + std::to_string(i), a));
    s.add(std::make_unique<ConvTranspose2d<T>>(4 * w, 2 * w, 3, 2, 1, 1, rng, "g.up1"));
    s.add(std::make_unique<InstanceNorm<T>>(2 * w, "g.up1_n"));
    s.add(std::make_unique<LeakyReLU<T>>(a));
    s.add(std::make_unique<ConvTranspose2d<T>>(2 * w, w, 3, 2, 1, 1, rng, "g.up2"));
    s.add(std::make_unique<InstanceNorm<T>>(w, "g.up2_n"));
    s.add(std::make_unique<LeakyReLU<T>>(a));
    s.add(std::make_unique<Conv2d<T>>(w, 1, 7, 1, 3, Pad::Reflect, rng, "g.head"));
    s.add(std::make_unique<Tanh<T>>());
    net.finalize();
}

// Patch critic: three stride-2 blocks then a 4x4 scoring conv, producing an
// NxN map of per-patch verdicts (N >= 1 at 16px input, N > 1 from 32px up).
template <typename T>
void build_patch_discriminator(nn::Net<T>& net, const DiscriminatorSpec& spec, Rng& rng) {
    using namespace nn;
    const int w = spec.base_channels;
    const T relu = T(0);
    auto& s = net.seq();
    s.add(std::make_unique<Conv2d<T>>(1, w, 4, 2, 1, Pad::Zero, rng, "dp.c1"));
    s.add(std::make_unique<LeakyReLU<T>>(relu));
    s.add(std::make_unique<Conv2d<T>>(w, 2 * w, 4, 2, 1, Pad::Zero, rng, "dp.c2"));
    s.add(std::make_unique<InstanceNorm<T>>(2 * w, "dp.n2"));
    s.add(std::make_unique<LeakyReLU<T>>(relu));
    s.add(std::make_unique<Conv2d<T>>(2 * w, 4 * w, 4, 2, 1, Pad::Zero, rng, "dp.c3"));
    s.add(std::make_unique<InstanceNorm<T>>(4 * w, "dp.n3"));
    s.add(std::make_unique<LeakyReLU<T>>(relu));
    s.add(std::make_unique<Conv2d<T>>(4 * w, 1, 4, 1, 1, Pad::Zero, rng, "dp.score"));
    net.finalize();
}

// Image-level critic: same trunk, then a 1-channel conv whose map collapses
// to a single scalar by spatial mean.
template <typename T>
void build_global_discriminator(nn::Net<T>& net, const DiscriminatorSpec& spec, Rng& rng) {
    using namespace nn;
    const int w = spec.base_channels;
    const T relu = T(0);
    auto& s = net.seq();
    s.add(std::make_unique<Conv2d<T>>(1, w, 4, 2, 1, Pad::Zero, rng, "dg.c1"));
    s.add(std::make_unique<LeakyReLU<T>>(relu));
    s.add(std::make_unique<Conv2d<T>>(w, 2 * w, 4, 2, 1, Pad::Zero, rng, "dg.c2"));
    s.add(std::make_unique<InstanceNorm<T>>(2 * w, "dg.n2"));
    s.add(std::make_unique<LeakyReLU<T>>(relu));
    s.add(std::make_unique<Conv2d<T>>(2 * w, 4 * w, 4, 2, 1, Pad::Zero, rng, "dg.c3"));
    s.add(std::make_unique<InstanceNorm<T>>(4 * w, "dg.n3"));
    s.add(std::make_unique<LeakyReLU<T>>(relu));
    s.add(std::make_unique<Conv2d<T>>(4 * w, 1, 3, 1, 1, Pad::Zero, rng, "dg.score"));
    s.add(std::make_unique<MeanAll<T>>());
    net.finalize();
}

// One domain's pair of critics.
template <typename T>
struct DiscriminatorPair {
    nn::Net<T> global;
    nn::Net<T> patch;

    void build(const DiscriminatorSpec& spec, Rng& rng) {
        build_global_discriminator(global, spec, rng);
        build_patch_discriminator(patch, spec, rng);
    }

    void zero_grad() {
        global.zero_grad();
        patch.zero_grad();
    }

    std::vector<nn::ParamBlock<T>*> params() const {
        std::vector<nn::ParamBlock<T>*> out = global.params();
        out.insert(out.end(), patch.params().begin(), patch.params().end());
        return out;
    }
};

}  // namespace slp::gan
