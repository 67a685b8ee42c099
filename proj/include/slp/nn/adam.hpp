#pragma once

#include <cmath>
#include <vector>

#include "slp/nn/layers.hpp"

namespace slp::nn {

// Adam over a fixed set of parameter blocks. Moments are keyed by block
// order, so the block list must not change between steps.
template <typename T>
class Adam {
public:
    Adam(std::vector<ParamBlock<T>*> params, double lr, double beta1 = 0.5,
         double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->w.size(), 0.0);
            v_[i].assign(params_[i]->w.size(), 0.0);
        }
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, double(t_));
        double bc2 = 1.0 - std::pow(beta2_, double(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            for (std::size_t j = 0; j < p.w.size(); ++j) {
                double g = double(p.g[j]);
                m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
                v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
                double mhat = m_[i][j] / bc1;
                double vhat = v_[i][j] / bc2;
                p.w[j] = T(double(p.w[j]) - lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    std::vector<ParamBlock<T>*> params_;
    double lr_;
    double beta1_, beta2_, eps_;
    // Moments kept in double regardless of T so float nets get stable updates.
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

}  // namespace slp::nn
