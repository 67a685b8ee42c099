#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "slp/error.hpp"

namespace slp::nn {

// Single-sample activation tensor, channels x height x width, channel-major.
// Batches are handled by the training loops, which keeps instance norm and
// per-sample augmentation trivial.
template <typename T>
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, T fill = T(0))
        : c(c_), h(h_), w(w_), v(std::size_t(c_) * h_ * w_, fill) {}

    std::size_t size() const { return v.size(); }
    T& at(int ch, int y, int x) { return v[(std::size_t(ch) * h + y) * w + x]; }
    T at(int ch, int y, int x) const { return v[(std::size_t(ch) * h + y) * w + x]; }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

enum class Pad { Zero, Reflect };

// Mirror-without-repeat boundary ((-1 -> 1, n -> n-2)).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

inline int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Gathers k x k patches into a (c*k*k) x (oh*ow) column-major matrix.
template <typename T>
void im2col(const Tensor<T>& x, int k, int stride, int pad, Pad mode, int oh, int ow,
            std::vector<T>& cols) {
    const int K = x.c * k * k;
    cols.assign(std::size_t(K) * oh * ow, T(0));
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            T* col = cols.data() + (std::size_t(oy) * ow + ox) * K;
            for (int ch = 0; ch < x.c; ++ch) {
                for (int ky = 0; ky < k; ++ky) {
                    int sy = oy * stride - pad + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        int sx = ox * stride - pad + kx;
                        T val;
                        if (sy >= 0 && sy < x.h && sx >= 0 && sx < x.w) {
                            val = x.at(ch, sy, sx);
                        } else if (mode == Pad::Reflect) {
                            val = x.at(ch, reflect_index(sy, x.h), reflect_index(sx, x.w));
                        } else {
                            val = T(0);
                        }
                        col[(std::size_t(ch) * k + ky) * k + kx] = val;
                    }
                }
            }
        }
    }
}

// Scatter-adds columns back into an image; exact adjoint of im2col.
template <typename T>
void col2im(const std::vector<T>& cols, int c, int h, int w, int k, int stride, int pad,
            Pad mode, int oh, int ow, Tensor<T>& out) {
    out = Tensor<T>(c, h, w, T(0));
    const int K = c * k * k;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const T* col = cols.data() + (std::size_t(oy) * ow + ox) * K;
            for (int ch = 0; ch < c; ++ch) {
                for (int ky = 0; ky < k; ++ky) {
                    int sy = oy * stride - pad + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        int sx = ox * stride - pad + kx;
                        T val = col[(std::size_t(ch) * k + ky) * k + kx];
                        if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                            out.at(ch, sy, sx) += val;
                        } else if (mode == Pad::Reflect) {
                            out.at(ch, reflect_index(sy, h), reflect_index(sx, w)) += val;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace slp::nn
