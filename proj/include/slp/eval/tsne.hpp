#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "slp/error.hpp"
#include "slp/rng.hpp"

namespace slp::eval {

// Exact (non-Barnes-Hut) t-SNE. Desk-scale input sizes only: the pairwise
// affinity matrix is dense. Perplexity = min(30, n/4); 1000 iterations with
// early exaggeration, momentum switching and adaptive per-coordinate gains.
inline std::vector<std::array<double, 2>> tsne_embed(
    const std::vector<std::vector<double>>& vectors, std::uint64_t seed,
    int iterations = 1000) {
    const int n = int(vectors.size());
    if (n < 5) throw InvalidInput("tsne_embed: need at least 5 vectors, got " +
                                  std::to_string(n));
    const std::size_t dim = vectors[0].size();
    for (const auto& v : vectors)
        if (v.size() != dim) throw InvalidInput("tsne_embed: mixed vector dimensions");
    const double perplexity = std::min(30.0, n / 4.0);
    const double log_perp = std::log(perplexity);

    std::vector<double> d2(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < dim; ++k) {
                double d = vectors[i][k] - vectors[j][k];
                s += d * d;
            }
            d2[std::size_t(i) * n + j] = s;
            d2[std::size_t(j) * n + i] = s;
        }

    // Per-point precision search matching the target entropy.
    std::vector<double> P(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        double beta = 1.0, beta_lo = 0.0, beta_hi = 1e30;
        std::vector<double> row(n);
        for (int it = 0; it < 64; ++it) {
            double sum = 0;
            for (int j = 0; j < n; ++j) {
                row[j] = (j == i) ? 0.0 : std::exp(-beta * d2[std::size_t(i) * n + j]);
                sum += row[j];
            }
            if (sum <= 0) sum = 1e-300;
            double H = 0;
            for (int j = 0; j < n; ++j) {
                if (row[j] <= 0) continue;
                double p = row[j] / sum;
                H -= p * std::log(p);
            }
            double diff = H - log_perp;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                beta_lo = beta;
                beta = (beta_hi >= 1e30) ? beta * 2 : (beta + beta_hi) / 2;
            } else {
                beta_hi = beta;
                beta = (beta + beta_lo) / 2;
            }
        }
        double sum = 0;
        for (int j = 0; j < n; ++j) {
            row[j] = (j == i) ? 0.0 : std::exp(-beta * d2[std::size_t(i) * n + j]);
            sum += row[j];
        }
        if (sum <= 0) sum = 1e-300;
        for (int j = 0; j < n; ++j) P[std::size_t(i) * n + j] = row[j] / sum;
    }
    // Symmetrize.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double p = (P[std::size_t(i) * n + j] + P[std::size_t(j) * n + i]) / (2.0 * n);
            p = std::max(p, 1e-12);
            P[std::size_t(i) * n + j] = p;
            P[std::size_t(j) * n + i] = p;
        }

    Rng rng(derive_seed(seed, 0x75e));
    std::vector<std::array<double, 2>> Y(n), dY(n, {0, 0}), iY(n, {0, 0});
    std::vector<std::array<double, 2>> gains(n, {1, 1});
    for (auto& y : Y) y = {rng.normal() * 1e-4, rng.normal() * 1e-4};

    const double lr = 200.0;
    const int exaggeration_until = std::min(250, iterations / 4 * 1);
    for (int iter = 0; iter < iterations; ++iter) {
        const double ex = (iter < exaggeration_until) ? 12.0 : 1.0;
        const double momentum = (iter < 250) ? 0.5 : 0.8;

        std::vector<double> W(std::size_t(n) * n, 0.0);
        double sumW = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double dx = Y[i][0] - Y[j][0], dy = Y[i][1] - Y[j][1];
                double w = 1.0 / (1.0 + dx * dx + dy * dy);
                W[std::size_t(i) * n + j] = w;
                W[std::size_t(j) * n + i] = w;
                sumW += 2 * w;
            }
        if (sumW <= 0) sumW = 1e-300;

        for (int i = 0; i < n; ++i) {
            double gx = 0, gy = 0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                double w = W[std::size_t(i) * n + j];
                double q = std::max(w / sumW, 1e-12);
                double mult = (ex * P[std::size_t(i) * n + j] - q) * w;
                gx += mult * (Y[i][0] - Y[j][0]);
                gy += mult * (Y[i][1] - Y[j][1]);
            }
            dY[i] = {4 * gx, 4 * gy};
        }

        double cx = 0, cy = 0;
        for (int i = 0; i < n; ++i) {
            for (int d = 0; d < 2; ++d) {
                bool same_sign = (dY[i][d] > 0) == (iY[i][d] > 0);
                gains[i][d] = same_sign ? std::max(0.01, gains[i][d] * 0.8)
                                        : gains[i][d] + 0.2;
                iY[i][d] = momentum * iY[i][d] - lr * gains[i][d] * dY[i][d];
                Y[i][d] += iY[i][d];
            }
            cx += Y[i][0];
            cy += Y[i][1];
        }
        cx /= n;
        cy /= n;
        for (int i = 0; i < n; ++i) {
            Y[i][0] -= cx;
            Y[i][1] -= cy;
        }
    }
    return Y;
}

}  // namespace slp::eval
