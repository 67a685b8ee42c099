#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "slp/nn/tensor.hpp"
#include "slp/rng.hpp"

namespace slp::nn {

// One named parameter array plus its gradient accumulator.
template <typename T>
struct ParamBlock {
    std::string name;
    std::vector<T> w;
    std::vector<T> g;

    void init(std::string n, std::size_t size) {
        name = std::move(n);
        w.assign(size, T(0));
        g.assign(size, T(0));
    }
};

// Layers run one sample at a time. backward() consumes the gradient w.r.t.
// the layer output, accumulates parameter gradients, and returns the gradient
// w.r.t. the layer input. Each layer caches what its own backward needs from
// the most recent forward, so backward must follow the matching forward.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x) = 0;
    virtual Tensor<T> backward(const Tensor<T>& gy) = 0;
    virtual void collect_params(std::vector<ParamBlock<T>*>& out) { (void)out; }
};

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(int in_ch, int out_ch, int k, int stride, int pad, Pad mode, Rng& rng,
           const std::string& name)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad), mode_(mode) {
        weight_.init(name + ".w", std::size_t(out_ch) * in_ch * k * k);
        bias_.init(name + ".b", std::size_t(out_ch));
        for (auto& v : weight_.w) v = T(rng.normal(0.0, 0.02));
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.c != in_ch_) throw Error("conv: channel mismatch");
        in_h_ = x.h;
        in_w_ = x.w;
        oh_ = conv_out_size(x.h, k_, stride_, pad_);
        ow_ = conv_out_size(x.w, k_, stride_, pad_);
        im2col(x, k_, stride_, pad_, mode_, oh_, ow_, cols_);
        const int K = in_ch_ * k_ * k_;
        const int N = oh_ * ow_;
        Tensor<T> y(out_ch_, oh_, ow_);
        Eigen::Map<const MatCM<T>> cols(cols_.data(), K, N);
        Eigen::Map<const MatRM<T>> wm(weight_.w.data(), out_ch_, K);
        Eigen::Map<MatRM<T>> ym(y.v.data(), out_ch_, N);
        ym.noalias() = wm * cols;
        for (int o = 0; o < out_ch_; ++o) ym.row(o).array() += bias_.w[o];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int K = in_ch_ * k_ * k_;
        const int N = oh_ * ow_;
        Eigen::Map<const MatRM<T>> gym(gy.v.data(), out_ch_, N);
        Eigen::Map<const MatCM<T>> cols(cols_.data(), K, N);
        Eigen::Map<MatRM<T>> gwm(weight_.g.data(), out_ch_, K);
        gwm.noalias() += gym * cols.transpose();
        // Fixed-order scalar sum: Eigen's redux splits at an address-dependent
        // boundary, which breaks bit-exact reproducibility across allocations.
        for (int o = 0; o < out_ch_; ++o) {
            const T* p = gy.v.data() + std::size_t(o) * N;
            T s = T(0);
            for (int i = 0; i < N; ++i) s += p[i];
            bias_.g[o] += s;
        }
        std::vector<T> dcols(std::size_t(K) * N);
        Eigen::Map<MatCM<T>> dc(dcols.data(), K, N);
        Eigen::Map<const MatRM<T>> wm(weight_.w.data(), out_ch_, K);
        dc.noalias() = wm.transpose() * gym;
        Tensor<T> gx;
        col2im(dcols, in_ch_, in_h_, in_w_, k_, stride_, pad_, mode_, oh_, ow_, gx);
        return gx;
    }

    void collect_params(std::vector<ParamBlock<T>*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int in_ch_, out_ch_, k_, stride_, pad_;
    Pad mode_;
    ParamBlock<T> weight_, bias_;
    std::vector<T> cols_;
    int in_h_ = 0, in_w_ = 0, oh_ = 0, ow_ = 0;
};

// Fractionally strided conv. Forward is the adjoint of a k x k strided conv,
// so output size is (in-1)*stride - 2*pad + k + out_pad.
template <typename T>
class ConvTranspose2d : public Layer<T> {
public:
    ConvTranspose2d(int in_ch, int out_ch, int k, int stride, int pad, int out_pad, Rng& rng,
                    const std::string& name)
        : in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad), out_pad_(out_pad) {
        weight_.init(name + ".w", std::size_t(in_ch) * out_ch * k * k);
        bias_.init(name + ".b", std::size_t(out_ch));
        for (auto& v : weight_.w) v = T(rng.normal(0.0, 0.02));
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.c != in_ch_) throw Error("conv_transpose: channel mismatch");
        in_h_ = x.h;
        in_w_ = x.w;
        x_ = x;
        const int H = (x.h - 1) * stride_ - 2 * pad_ + k_ + out_pad_;
        const int W = (x.w - 1) * stride_ - 2 * pad_ + k_ + out_pad_;
        const int K = out_ch_ * k_ * k_;
        const int N = x.h * x.w;
        std::vector<T> cols(std::size_t(K) * N);
        Eigen::Map<MatCM<T>> cm(cols.data(), K, N);
        Eigen::Map<const MatRM<T>> wm(weight_.w.data(), in_ch_, K);
        Eigen::Map<const MatRM<T>> xm(x.v.data(), in_ch_, N);
        cm.noalias() = wm.transpose() * xm;
        Tensor<T> y;
        col2im(cols, out_ch_, H, W, k_, stride_, pad_, Pad::Zero, x.h, x.w, y);
        for (int o = 0; o < out_ch_; ++o) {
            T b = bias_.w[o];
            T* p = y.v.data() + std::size_t(o) * H * W;
            for (int i = 0; i < H * W; ++i) p[i] += b;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        const int K = out_ch_ * k_ * k_;
        const int N = in_h_ * in_w_;
        std::vector<T> cols_dy;
        im2col(gy, k_, stride_, pad_, Pad::Zero, in_h_, in_w_, cols_dy);
        Eigen::Map<const MatCM<T>> cdy(cols_dy.data(), K, N);
        Eigen::Map<const MatRM<T>> xm(x_.v.data(), in_ch_, N);
        Eigen::Map<MatRM<T>> gwm(weight_.g.data(), in_ch_, K);
        gwm.noalias() += xm * cdy.transpose();
        for (int o = 0; o < out_ch_; ++o) {
            const T* p = gy.v.data() + std::size_t(o) * gy.h * gy.w;
            T s = T(0);
            for (int i = 0; i < gy.h * gy.w; ++i) s += p[i];
            bias_.g[o] += s;
        }
        Tensor<T> gx(in_ch_, in_h_, in_w_);
        Eigen::Map<MatRM<T>> gxm(gx.v.data(), in_ch_, N);
        Eigen::Map<const MatRM<T>> wm(weight_.w.data(), in_ch_, K);
        gxm.noalias() = wm * cdy;
        return gx;
    }

    void collect_params(std::vector<ParamBlock<T>*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int in_ch_, out_ch_, k_, stride_, pad_, out_pad_;
    ParamBlock<T> weight_, bias_;
    Tensor<T> x_;
    int in_h_ = 0, in_w_ = 0;
};

// Per-channel, per-sample normalization with learned affine.
template <typename T>
class InstanceNorm : public Layer<T> {
public:
    InstanceNorm(int ch, const std::string& name, T eps = T(1e-5)) : ch_(ch), eps_(eps) {
        gamma_.init(name + ".g", std::size_t(ch));
        beta_.init(name + ".b", std::size_t(ch));
        for (auto& v : gamma_.w) v = T(1);
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.c != ch_) throw Error("instance_norm: channel mismatch");
        xhat_ = Tensor<T>(x.c, x.h, x.w);
        inv_std_.assign(ch_, T(0));
        Tensor<T> y(x.c, x.h, x.w);
        const int n = x.h * x.w;
        for (int ch = 0; ch < ch_; ++ch) {
            const T* p = x.v.data() + std::size_t(ch) * n;
            T mean = T(0);
            for (int i = 0; i < n; ++i) mean += p[i];
            mean /= T(n);
            T var = T(0);
            for (int i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
            var /= T(n);
            T is = T(1) / std::sqrt(var + eps_);
            inv_std_[ch] = is;
            T* xh = xhat_.v.data() + std::size_t(ch) * n;
            T* yo = y.v.data() + std::size_t(ch) * n;
            for (int i = 0; i < n; ++i) {
                xh[i] = (p[i] - mean) * is;
                yo[i] = gamma_.w[ch] * xh[i] + beta_.w[ch];
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx(gy.c, gy.h, gy.w);
        const int n = gy.h * gy.w;
        for (int ch = 0; ch < ch_; ++ch) {
            const T* g = gy.v.data() + std::size_t(ch) * n;
            const T* xh = xhat_.v.data() + std::size_t(ch) * n;
            T sum_g = T(0), sum_gx = T(0);
            for (int i = 0; i < n; ++i) {
                sum_g += g[i];
                sum_gx += g[i] * xh[i];
            }
            gamma_.g[ch] += sum_gx;
            beta_.g[ch] += sum_g;
            T scale = gamma_.w[ch] * inv_std_[ch] / T(n);
            T* o = gx.v.data() + std::size_t(ch) * n;
            for (int i = 0; i < n; ++i)
                o[i] = scale * (T(n) * g[i] - sum_g - xh[i] * sum_gx);
        }
        return gx;
    }

    void collect_params(std::vector<ParamBlock<T>*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

private:
    int ch_;
    T eps_;
    ParamBlock<T> gamma_, beta_;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

template <typename T>
class LeakyReLU : public Layer<T> {
public:
    explicit LeakyReLU(T alpha) : alpha_(alpha) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        x_ = x;
        Tensor<T> y = x;
        for (auto& v : y.v)
            if (v < T(0)) v *= alpha_;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            if (x_.v[i] < T(0)) gx.v[i] *= alpha_;
        return gx;
    }

private:
    T alpha_;
    Tensor<T> x_;
};

template <typename T>
class Tanh : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) override {
        y_ = x;
        for (auto& v : y_.v) v = std::tanh(v);
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            gx.v[i] *= (T(1) - y_.v[i] * y_.v[i]);
        return gx;
    }

private:
    Tensor<T> y_;
};

// Reduces the whole tensor to its scalar mean; used as the final stage of the
// image-level critic so its verdict is a single number.
template <typename T>
class MeanAll : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x) override {
        c_ = x.c;
        h_ = x.h;
        w_ = x.w;
        T s = T(0);
        for (auto v : x.v) s += v;
        Tensor<T> y(1, 1, 1);
        y.v[0] = s / T(x.v.size());
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx(c_, h_, w_);
        T g = gy.v[0] / T(gx.v.size());
        for (auto& v : gx.v) v = g;
        return gx;
    }

private:
    int c_ = 0, h_ = 0, w_ = 0;
};

// Fully connected map from a flattened tensor to an (m,1,1) output.
template <typename T>
class Dense : public Layer<T> {
public:
    Dense(int in_dim, int out_dim, Rng& rng, const std::string& name)
        : in_dim_(in_dim), out_dim_(out_dim) {
        weight_.init(name + ".w", std::size_t(out_dim) * in_dim);
        bias_.init(name + ".b", std::size_t(out_dim));
        T sd = T(1) / std::sqrt(T(in_dim));
        for (auto& v : weight_.w) v = T(rng.normal(0.0, double(sd)));
    }

    // Hand-rolled matrix-vector products: Eigen's gemv peels to an
    // address-dependent alignment boundary, so reductions would not be
    // bit-reproducible across allocations. These sizes are small.
    Tensor<T> forward(const Tensor<T>& x) override {
        if (int(x.v.size()) != in_dim_) throw Error("dense: input size mismatch");
        x_ = x;
        Tensor<T> y(out_dim_, 1, 1);
        for (int o = 0; o < out_dim_; ++o) {
            const T* w = weight_.w.data() + std::size_t(o) * in_dim_;
            T s = bias_.w[o];
            for (int i = 0; i < in_dim_; ++i) s += w[i] * x.v[i];
            y.v[o] = s;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        for (int o = 0; o < out_dim_; ++o) {
            T* gw = weight_.g.data() + std::size_t(o) * in_dim_;
            T g = gy.v[o];
            for (int i = 0; i < in_dim_; ++i) gw[i] += g * x_.v[i];
            bias_.g[o] += g;
        }
        Tensor<T> gx(x_.c, x_.h, x_.w);
        for (int o = 0; o < out_dim_; ++o) {
            const T* w = weight_.w.data() + std::size_t(o) * in_dim_;
            T g = gy.v[o];
            for (int i = 0; i < in_dim_; ++i) gx.v[i] += g * w[i];
        }
        return gx;
    }

    void collect_params(std::vector<ParamBlock<T>*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int in_dim_, out_dim_;
    ParamBlock<T> weight_, bias_;
    Tensor<T> x_;
};

template <typename T>
class Sequential : public Layer<T> {
public:
    Sequential() = default;

    Sequential& add(std::unique_ptr<Layer<T>> l) {
        layers_.push_back(std::move(l));
        return *this;
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        Tensor<T> cur = x;
        for (auto& l : layers_) cur = l->forward(cur);
        return cur;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> cur = gy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }

    void collect_params(std::vector<ParamBlock<T>*>& out) override {
        for (auto& l : layers_) l->collect_params(out);
    }

    std::size_t layer_count() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// conv-norm-act-conv-norm with a skip connection around the stack.
template <typename T>
class ResidualBlock : public Layer<T> {
public:
    ResidualBlock(int ch, Rng& rng, const std::string& name, T leak = T(0.2)) {
        body_.add(std::make_unique<Conv2d<T>>(ch, ch, 3, 1, 1, Pad::Reflect, rng, name + ".c1"));
        body_.add(std::make_unique<InstanceNorm<T>>(ch, name + ".n1"));
        body_.add(std::make_unique<LeakyReLU<T>>(leak));
        body_.add(std::make_unique<Conv2d<T>>(ch, ch, 3, 1, 1, Pad::Reflect, rng, name + ".c2"));
        body_.add(std::make_unique<InstanceNorm<T>>(ch, name + ".n2"));
    }

    Tensor<T> forward(const Tensor<T>& x) override {
        Tensor<T> y = body_.forward(x);
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) override {
        Tensor<T> gx = body_.backward(gy);
        for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gy.v[i];
        return gx;
    }

    void collect_params(std::vector<ParamBlock<T>*>& out) override { body_.collect_params(out); }

private:
    Sequential<T> body_;
};

}  // namespace slp::nn
