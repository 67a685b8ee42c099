#pragma once

#include <cmath>
#include <vector>

#include "slp/error.hpp"
#include "slp/nn/tensor.hpp"

namespace slp::gan {

enum class Side { Generator, Discriminator };

// Mean absolute difference between a round-trip reconstruction and the
// original. Symmetric, zero iff equal.
template <typename T>
T cycle_consistency_loss(const nn::Tensor<T>& x, const nn::Tensor<T>& x_reconstructed) {
    if (!x.same_shape(x_reconstructed)) throw InvalidInput("cycle loss: shape mismatch");
    T s = T(0);
    for (std::size_t i = 0; i < x.v.size(); ++i) s += std::abs(x.v[i] - x_reconstructed.v[i]);
    return s / T(x.v.size());
}

// d(cycle_consistency_loss)/d(recon); sign convention sign(0) = 0.
template <typename T>
nn::Tensor<T> cycle_consistency_grad(const nn::Tensor<T>& recon, const nn::Tensor<T>& orig,
                                     T weight = T(1)) {
    if (!recon.same_shape(orig)) throw InvalidInput("cycle grad: shape mismatch");
    nn::Tensor<T> g(recon.c, recon.h, recon.w);
    T w = weight / T(recon.v.size());
    for (std::size_t i = 0; i < recon.v.size(); ++i) {
        T d = recon.v[i] - orig.v[i];
        g.v[i] = d > T(0) ? w : (d < T(0) ? -w : T(0));
    }
    return g;
}

// Least-squares objective for one critic's score array. Discriminator side
// pushes real scores to 1 and fake scores to 0; generator side pushes fake
// scores to 1. Patch critics pass their whole score map, which is averaged.
template <typename T>
T adversarial_losses(const std::vector<T>& real_scores, const std::vector<T>& fake_scores,
                     Side side) {
    if (side == Side::Generator) {
        if (fake_scores.empty()) throw InvalidInput("adversarial loss: no fake scores");
        T s = T(0);
        for (T f : fake_scores) s += (f - T(1)) * (f - T(1));
        return s / T(fake_scores.size());
    }
    if (real_scores.empty() || fake_scores.empty())
        throw InvalidInput("adversarial loss: empty score set");
    T sr = T(0), sf = T(0);
    for (T r : real_scores) sr += (r - T(1)) * (r - T(1));
    for (T f : fake_scores) sf += f * f;
    return (sr / T(real_scores.size()) + sf / T(fake_scores.size())) / T(2);
}

template <typename T>
T adversarial_losses(const nn::Tensor<T>& real_scores, const nn::Tensor<T>& fake_scores,
                     Side side) {
    return adversarial_losses(real_scores.v, fake_scores.v, side);
}

// A generator faces two critics per target domain; their terms combine by
// unweighted mean.
template <typename T>
T combined_adversarial(T global_term, T patch_term) {
    return (global_term + patch_term) / T(2);
}

template <typename T>
T total_generator_loss(T adv_G, T adv_F, T cyc_A, T cyc_B, T lambda) {
    return adv_G + adv_F + lambda * (cyc_A + cyc_B);
}

// Generator-side term mean((s-1)^2) over one critic's score map, plus the
// gradient w.r.t. the scores scaled by `weight` (the critic's share of the
// combined objective).
template <typename T>
T generator_score_loss_grad(const nn::Tensor<T>& scores, T weight, nn::Tensor<T>& grad_out) {
    grad_out = nn::Tensor<T>(scores.c, scores.h, scores.w);
    const T n = T(scores.v.size());
    T loss = T(0);
    for (std::size_t i = 0; i < scores.v.size(); ++i) {
        T d = scores.v[i] - T(1);
        loss += d * d;
        grad_out.v[i] = weight * T(2) * d / n;
    }
    return loss / n;
}

// Discriminator-side term ((real-1)^2 contribution) for the real branch.
template <typename T>
T disc_real_loss_grad(const nn::Tensor<T>& scores, T weight, nn::Tensor<T>& grad_out) {
    grad_out = nn::Tensor<T>(scores.c, scores.h, scores.w);
    const T n = T(scores.v.size());
    T loss = T(0);
    for (std::size_t i = 0; i < scores.v.size(); ++i) {
        T d = scores.v[i] - T(1);
        loss += d * d;
        grad_out.v[i] = weight * d / n;  // d/ds of mean((s-1)^2)/2
    }
    return loss / n;
}

// Discriminator-side term (fake^2 contribution) for the fake branch.
template <typename T>
T disc_fake_loss_grad(const nn::Tensor<T>& scores, T weight, nn::Tensor<T>& grad_out) {
    grad_out = nn::Tensor<T>(scores.c, scores.h, scores.w);
    const T n = T(scores.v.size());
    T loss = T(0);
    for (std::size_t i = 0; i < scores.v.size(); ++i) {
        T s = scores.v[i];
        loss += s * s;
        grad_out.v[i] = weight * s / n;  // d/ds of mean(s^2)/2
    }
    return loss / n;
}

}  // namespace slp::gan
