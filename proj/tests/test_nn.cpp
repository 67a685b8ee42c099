#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "slp/error.hpp"
#include "slp/nn/adam.hpp"
#include "slp/nn/layers.hpp"
#include "slp/nn/net.hpp"
#include "slp/nn/tensor.hpp"
#include "slp/rng.hpp"

using namespace slp;
namespace fs = std::filesystem;

namespace {

using D = double;
using TD = nn::Tensor<D>;

TD random_tensor(int c, int h, int w, Rng& rng) {
    TD t(c, h, w);
    for (auto& v : t.v) v = rng.normal();
    return t;
}

double dot(const TD& a, const TD& b) {
    REQUIRE(a.v.size() == b.v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

// Nested-loop convolution over the same weight layout as Conv2d
// (out_ch x in_ch x k x k, row-major).
TD conv_ref(const TD& x, const std::vector<D>& w, const std::vector<D>& b, int out_ch, int k,
            int stride, int pad, nn::Pad mode) {
    const int oh = nn::conv_out_size(x.h, k, stride, pad);
    const int ow = nn::conv_out_size(x.w, k, stride, pad);
    TD y(out_ch, oh, ow);
    for (int o = 0; o < out_ch; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                D acc = b[std::size_t(o)];
                for (int ic = 0; ic < x.c; ++ic) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            int sy = oy * stride - pad + ky;
                            int sx = ox * stride - pad + kx;
                            D val = 0.0;
                            if (sy >= 0 && sy < x.h && sx >= 0 && sx < x.w)
                                val = x.at(ic, sy, sx);
                            else if (mode == nn::Pad::Reflect)
                                val = x.at(ic, nn::reflect_index(sy, x.h),
                                           nn::reflect_index(sx, x.w));
                            acc += w[((std::size_t(o) * x.c + ic) * k + ky) * k + kx] * val;
                        }
                    }
                }
                y.at(o, oy, ox) = acc;
            }
        }
    }
    return y;
}

std::vector<nn::ParamBlock<D>*> blocks_of(nn::Layer<D>& layer) {
    std::vector<nn::ParamBlock<D>*> ps;
    layer.collect_params(ps);
    return ps;
}

// Scalar loss = sum(y^2), smooth everywhere so finite differences are clean.
double sumsq_loss(const TD& y) {
    double s = 0.0;
    for (auto v : y.v) s += v * v;
    return s;
}

TD sumsq_grad(const TD& y) {
    TD g = y;
    for (auto& v : g.v) v *= 2.0;
    return g;
}

}  // namespace

TEST_CASE("conv output size and reflect index") {
    CHECK(nn::conv_out_size(8, 3, 1, 1) == 8);
    CHECK(nn::conv_out_size(8, 3, 2, 1) == 4);
    CHECK(nn::conv_out_size(8, 7, 1, 3) == 8);
    CHECK(nn::conv_out_size(5, 3, 1, 0) == 3);

    CHECK(nn::reflect_index(-1, 5) == 1);
    CHECK(nn::reflect_index(-2, 5) == 2);
    CHECK(nn::reflect_index(5, 5) == 3);
    CHECK(nn::reflect_index(6, 5) == 2);
    CHECK(nn::reflect_index(2, 5) == 2);
    CHECK(nn::reflect_index(3, 1) == 0);
}

TEST_CASE("im2col and col2im are adjoint") {
    Rng rng(41);
    struct Cfg {
        int k, stride, pad;
        nn::Pad mode;
    };
    for (Cfg cfg : {Cfg{3, 1, 1, nn::Pad::Zero}, Cfg{3, 2, 1, nn::Pad::Reflect},
                    Cfg{5, 1, 2, nn::Pad::Zero}, Cfg{7, 1, 3, nn::Pad::Reflect}}) {
        TD x = random_tensor(2, 9, 8, rng);
        const int oh = nn::conv_out_size(x.h, cfg.k, cfg.stride, cfg.pad);
        const int ow = nn::conv_out_size(x.w, cfg.k, cfg.stride, cfg.pad);
        std::vector<D> cols;
        nn::im2col(x, cfg.k, cfg.stride, cfg.pad, cfg.mode, oh, ow, cols);

        std::vector<D> g(cols.size());
        for (auto& v : g) v = rng.normal();
        TD back;
        nn::col2im(g, x.c, x.h, x.w, cfg.k, cfg.stride, cfg.pad, cfg.mode, oh, ow, back);

        double lhs = 0.0;
        for (std::size_t i = 0; i < cols.size(); ++i) lhs += cols[i] * g[i];
        double rhs = dot(x, back);
        CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-12));
    }
}

TEST_CASE("conv forward matches direct convolution") {
    Rng rng(42);
    struct Cfg {
        int k, stride, pad;
        nn::Pad mode;
    };
    for (Cfg cfg : {Cfg{3, 1, 1, nn::Pad::Zero}, Cfg{3, 2, 1, nn::Pad::Zero},
                    Cfg{3, 1, 1, nn::Pad::Reflect}, Cfg{7, 1, 3, nn::Pad::Reflect},
                    Cfg{4, 2, 1, nn::Pad::Zero}}) {
        nn::Conv2d<D> conv(2, 3, cfg.k, cfg.stride, cfg.pad, cfg.mode, rng, "c");
        auto ps = blocks_of(conv);
        REQUIRE(ps.size() == 2);
        REQUIRE(ps[0]->name == "c.w");
        REQUIRE(ps[1]->name == "c.b");
        for (auto& v : ps[1]->w) v = rng.normal();  // exercise nonzero bias

        TD x = random_tensor(2, 10, 9, rng);
        TD got = conv.forward(x);
        TD want = conv_ref(x, ps[0]->w, ps[1]->w, 3, cfg.k, cfg.stride, cfg.pad, cfg.mode);
        REQUIRE(got.same_shape(want));
        for (std::size_t i = 0; i < got.v.size(); ++i)
            CHECK_THAT(got.v[i], Catch::Matchers::WithinAbs(want.v[i], 1e-12));
    }
}

TEST_CASE("conv backward is the adjoint of forward") {
    Rng rng(43);
    // Fresh layers have zero bias, so <conv(x), gy> == <x, backward(gy)> exactly.
    for (nn::Pad mode : {nn::Pad::Zero, nn::Pad::Reflect}) {
        nn::Conv2d<D> conv(3, 2, 3, 2, 1, mode, rng, "c");
        TD x = random_tensor(3, 8, 7, rng);
        TD y = conv.forward(x);
        TD gy = random_tensor(y.c, y.h, y.w, rng);
        TD gx = conv.backward(gy);
        REQUIRE(gx.same_shape(x));
        CHECK_THAT(dot(y, gy), Catch::Matchers::WithinRel(dot(x, gx), 1e-10));
    }
}

TEST_CASE("conv transpose doubles spatial size and is adjoint") {
    Rng rng(44);
    nn::ConvTranspose2d<D> up(4, 2, 3, 2, 1, 1, rng, "u");
    TD x = random_tensor(4, 5, 7, rng);
    TD y = up.forward(x);
    CHECK(y.c == 2);
    CHECK(y.h == 10);
    CHECK(y.w == 14);

    TD gy = random_tensor(y.c, y.h, y.w, rng);
    TD gx = up.backward(gy);
    REQUIRE(gx.same_shape(x));
    CHECK_THAT(dot(y, gy), Catch::Matchers::WithinRel(dot(x, gx), 1e-10));
}

TEST_CASE("instance norm output has zero mean and unit variance per channel") {
    Rng rng(45);
    nn::InstanceNorm<D> norm(3, "n");
    TD x = random_tensor(3, 6, 5, rng);
    for (int ch = 0; ch < 3; ++ch)
        for (int i = 0; i < 30; ++i) x.v[std::size_t(ch) * 30 + i] += 2.0 * (ch + 1);

    TD y = norm.forward(x);
    const int n = 30;
    for (int ch = 0; ch < 3; ++ch) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < n; ++i) mean += y.v[std::size_t(ch) * n + i];
        mean /= n;
        for (int i = 0; i < n; ++i) {
            double d = y.v[std::size_t(ch) * n + i] - mean;
            var += d * d;
        }
        var /= n;
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 1e-9));
        CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 1e-4));
    }

    SECTION("affine parameters rescale the normalized output") {
        auto ps = blocks_of(norm);
        REQUIRE(ps.size() == 2);
        REQUIRE(ps[0]->name == "n.g");
        for (auto& v : ps[0]->w) v = 2.0;
        for (auto& v : ps[1]->w) v = 0.5;
        TD y2 = norm.forward(x);
        for (std::size_t i = 0; i < y.v.size(); ++i)
            CHECK_THAT(y2.v[i], Catch::Matchers::WithinAbs(2.0 * y.v[i] + 0.5, 1e-9));
    }

    SECTION("channel mismatch throws") {
        TD bad(2, 4, 4);
        CHECK_THROWS_AS(norm.forward(bad), Error);
    }
}

TEST_CASE("activation definitions") {
    nn::LeakyReLU<D> lrelu(0.2);
    TD x(1, 1, 4);
    x.v = {-2.0, -0.5, 0.0, 3.0};
    TD y = lrelu.forward(x);
    CHECK_THAT(y.v[0], Catch::Matchers::WithinAbs(-0.4, 1e-12));
    CHECK_THAT(y.v[1], Catch::Matchers::WithinAbs(-0.1, 1e-12));
    CHECK_THAT(y.v[2], Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(y.v[3], Catch::Matchers::WithinAbs(3.0, 1e-12));

    TD gy(1, 1, 4, 1.0);
    TD gx = lrelu.backward(gy);
    CHECK_THAT(gx.v[0], Catch::Matchers::WithinAbs(0.2, 1e-12));
    CHECK_THAT(gx.v[3], Catch::Matchers::WithinAbs(1.0, 1e-12));

    nn::Tanh<D> tanh_l;
    TD t = tanh_l.forward(x);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK_THAT(t.v[i], Catch::Matchers::WithinAbs(std::tanh(x.v[i]), 1e-12));
    TD tg = tanh_l.backward(gy);
    for (std::size_t i = 0; i < 4; ++i) {
        double th = std::tanh(x.v[i]);
        CHECK_THAT(tg.v[i], Catch::Matchers::WithinAbs(1.0 - th * th, 1e-12));
    }
}

TEST_CASE("mean-all layer averages and distributes gradient evenly") {
    nn::MeanAll<D> mean;
    TD x(2, 2, 2);
    x.v = {1, 2, 3, 4, 5, 6, 7, 8};
    TD y = mean.forward(x);
    REQUIRE(y.v.size() == 1);
    CHECK_THAT(y.v[0], Catch::Matchers::WithinAbs(4.5, 1e-12));

    TD gy(1, 1, 1);
    gy.v[0] = 8.0;
    TD gx = mean.backward(gy);
    REQUIRE(gx.same_shape(x));
    for (auto v : gx.v) CHECK_THAT(v, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("dense forward matches explicit matrix product") {
    Rng rng(46);
    nn::Dense<D> dense(6, 3, rng, "d");
    auto ps = blocks_of(dense);
    for (auto& v : ps[1]->w) v = rng.normal();

    TD x = random_tensor(1, 2, 3, rng);
    TD y = dense.forward(x);
    REQUIRE(y.v.size() == 3);
    for (int o = 0; o < 3; ++o) {
        double want = ps[1]->w[std::size_t(o)];
        for (int i = 0; i < 6; ++i) want += ps[0]->w[std::size_t(o) * 6 + i] * x.v[std::size_t(i)];
        CHECK_THAT(y.v[std::size_t(o)], Catch::Matchers::WithinAbs(want, 1e-12));
    }

    SECTION("input size mismatch throws") {
        TD bad(1, 1, 5);
        CHECK_THROWS_AS(dense.forward(bad), Error);
    }
}

TEST_CASE("residual block with zeroed convolutions is the identity") {
    Rng rng(47);
    nn::ResidualBlock<D> block(2, rng, "r");
    auto ps = blocks_of(block);
    for (auto* p : ps)
        if (p->name.size() >= 2 && p->name.compare(p->name.size() - 2, 2, ".w") == 0)
            for (auto& v : p->w) v = 0.0;
    TD x = random_tensor(2, 5, 5, rng);
    TD y = block.forward(x);
    REQUIRE(y.same_shape(x));
    // The body normalizes all-zero maps back to zero, so only the skip
    // connection survives.
    for (std::size_t i = 0; i < x.v.size(); ++i)
        CHECK_THAT(y.v[i], Catch::Matchers::WithinAbs(x.v[i], 1e-9));
}

TEST_CASE("analytic gradients match finite differences on a smooth net") {
    Rng rng(48);
    nn::Net<D> net;
    net.seq()
        .add(std::make_unique<nn::Conv2d<D>>(1, 2, 3, 1, 1, nn::Pad::Reflect, rng, "c1"))
        .add(std::make_unique<nn::Tanh<D>>())
        .add(std::make_unique<nn::Conv2d<D>>(2, 2, 3, 2, 1, nn::Pad::Zero, rng, "c2"))
        .add(std::make_unique<nn::InstanceNorm<D>>(2, "n1"))
        .add(std::make_unique<nn::Tanh<D>>())
        .add(std::make_unique<nn::Dense<D>>(18, 3, rng, "d"));
    net.finalize();
    for (auto* p : net.params())
        for (auto& v : p->w) v = rng.normal(0.0, 0.3);

    TD x = random_tensor(1, 6, 6, rng);
    auto loss_at = [&]() { return sumsq_loss(net.forward(x)); };

    net.zero_grad();
    TD y = net.forward(x);
    TD gx = net.backward(sumsq_grad(y));

    const double h = 1e-6;
    auto check_grad = [&](double analytic, double& slot) {
        double keep = slot;
        slot = keep + h;
        double up = loss_at();
        slot = keep - h;
        double down = loss_at();
        slot = keep;
        double numeric = (up - down) / (2.0 * h);
        CHECK_THAT(analytic,
                   Catch::Matchers::WithinAbs(numeric, 1e-6 + 1e-5 * std::abs(numeric)));
    };

    // Every parameter of every block, including the conv bias feeding the
    // norm layer whose true gradient is exactly zero.
    for (auto* p : net.params())
        for (std::size_t i = 0; i < p->w.size(); ++i) check_grad(p->g[i], p->w[i]);

    for (std::size_t i = 0; i < x.v.size(); ++i) check_grad(gx.v[i], x.v[i]);
}

TEST_CASE("adam first step moves by lr times gradient sign") {
    nn::ParamBlock<D> p;
    p.init("p", 4);
    p.w = {1.0, -2.0, 0.5, 3.0};
    p.g = {0.4, -1.5, 2.0, -0.01};
    std::vector<D> before = p.w;

    nn::Adam<D> opt({&p}, 0.01, 0.5, 0.999);
    opt.step();
    for (std::size_t i = 0; i < 4; ++i) {
        double delta = p.w[i] - before[i];
        double want = -0.01 * (p.g[i] > 0 ? 1.0 : -1.0);
        CHECK_THAT(delta, Catch::Matchers::WithinAbs(want, 1e-5));
    }
}

TEST_CASE("adam minimizes a quadratic") {
    nn::ParamBlock<D> p;
    p.init("p", 3);
    p.w = {5.0, -4.0, 0.0};
    const std::vector<D> target = {1.0, 2.0, -3.0};

    nn::Adam<D> opt({&p}, 0.05, 0.9, 0.999);
    for (int it = 0; it < 1500; ++it) {
        for (std::size_t i = 0; i < 3; ++i) p.g[i] = 2.0 * (p.w[i] - target[i]);
        opt.step();
    }
    for (std::size_t i = 0; i < 3; ++i)
        CHECK_THAT(p.w[i], Catch::Matchers::WithinAbs(target[i], 1e-3));
}

namespace {

nn::Net<float> small_float_net(std::uint64_t seed) {
    Rng rng(seed);
    nn::Net<float> net;
    net.seq()
        .add(std::make_unique<nn::Conv2d<float>>(1, 4, 3, 1, 1, nn::Pad::Reflect, rng, "c1"))
        .add(std::make_unique<nn::InstanceNorm<float>>(4, "n1"))
        .add(std::make_unique<nn::LeakyReLU<float>>(0.2f))
        .add(std::make_unique<nn::Conv2d<float>>(4, 1, 3, 1, 1, nn::Pad::Reflect, rng, "c2"));
    net.finalize();
    return net;
}

}  // namespace

TEST_CASE("weights survive a save and load round trip") {
    fs::path dir = fs::temp_directory_path() / "slp_nn_weights_test";
    fs::create_directories(dir);
    std::string path = (dir / "w.bin").string();

    nn::Net<float> a = small_float_net(7);
    nn::save_weights(a, path);

    nn::Net<float> b = small_float_net(99);  // different init, same layout
    nn::load_weights(b, path);

    REQUIRE(a.params().size() == b.params().size());
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        CHECK(a.params()[i]->name == b.params()[i]->name);
        CHECK(a.params()[i]->w == b.params()[i]->w);
    }

    Rng rng(5);
    nn::Tensor<float> x(1, 8, 8);
    for (auto& v : x.v) v = float(rng.normal());
    nn::Tensor<float> ya = a.forward(x);
    nn::Tensor<float> yb = b.forward(x);
    CHECK(ya.v == yb.v);

    SECTION("architecture mismatch is rejected") {
        Rng r2(3);
        nn::Net<float> wide;
        wide.seq().add(
            std::make_unique<nn::Conv2d<float>>(1, 8, 3, 1, 1, nn::Pad::Reflect, r2, "c1"));
        wide.finalize();
        CHECK_THROWS_AS(nn::load_weights(wide, path), IoError);
    }
    fs::remove_all(dir);
}

TEST_CASE("net bookkeeping") {
    nn::Net<float> net = small_float_net(11);
    // c1: 36 + 4, n1: 4 + 4, c2: 36 + 1.
    CHECK(net.param_count() == 85);
    CHECK(net.params_finite());

    for (auto* p : net.params())
        for (auto& g : p->g) g = 1.0f;
    net.zero_grad();
    for (auto* p : net.params())
        for (auto g : p->g) CHECK(g == 0.0f);

    nn::Net<float> other = small_float_net(23);
    other.copy_weights_from(net);
    for (std::size_t i = 0; i < net.params().size(); ++i)
        CHECK(other.params()[i]->w == net.params()[i]->w);
}
