#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "slp/config.hpp"
#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/imgproc.hpp"
#include "slp/match/embedder.hpp"
#include "slp/nn/adam.hpp"

namespace slp::match {

struct MatcherConfig {
    double alignment_weight = 0.0;  // 0 disables the alignment head
    EmbedderSpec net;
    int epochs = 10;
    int batch_size = 8;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint64_t seed = 1;
    bool augment = true;
    AugmentConfig augment_cfg;

    static MatcherConfig from_config(const Config& c) {
        MatcherConfig m;
        m.alignment_weight = c.get_double("matcher.alignment_weight", m.alignment_weight);
        m.net.input_size = int(c.get_int("matcher.input_size", m.net.input_size));
        m.net.base_channels = int(c.get_int("matcher.base_channels", m.net.base_channels));
        m.net.embedding_dim = int(c.get_int("matcher.embedding_dim", m.net.embedding_dim));
        m.epochs = int(c.get_int("matcher.epochs", m.epochs));
        m.batch_size = int(c.get_int("matcher.batch_size", m.batch_size));
        m.lr = c.get_double("matcher.lr", m.lr);
        m.beta1 = c.get_double("matcher.beta1", m.beta1);
        m.beta2 = c.get_double("matcher.beta2", m.beta2);
        m.augment = c.get_bool("matcher.augment", m.augment);
        m.seed = std::uint64_t(c.get_int("matcher.seed", std::int64_t(m.seed)));
        m.augment_cfg.max_translate_px =
            c.get_double("augment.max_translate_px", m.augment_cfg.max_translate_px);
        m.augment_cfg.max_rotate_deg =
            c.get_double("augment.max_rotate_deg", m.augment_cfg.max_rotate_deg);
        m.augment_cfg.native_size =
            int(c.get_int("augment.native_size", m.augment_cfg.native_size));
        m.validate();
        return m;
    }

    void validate() const {
        if (alignment_weight < 0)
            throw InvalidInput("matcher.alignment_weight must be >= 0");
        if (epochs < 0) throw InvalidInput("matcher.epochs must be >= 0");
        if (batch_size < 1) throw InvalidInput("matcher.batch_size must be >= 1");
    }
};

struct TrainSample {
    FingerprintImage img;
    int identity_index;
};

// Flattens records into labeled samples. `kinds` filters which impressions
// participate; identity indices follow the sorted order of identity strings.
inline std::vector<TrainSample> samples_from_records(
    const std::vector<FingerRecord>& records, const std::vector<ImpressionKind>& kinds,
    std::vector<std::string>& identities_out) {
    std::map<std::string, int> ids;
    for (const auto& r : records) {
        if (r.identity.empty())
            throw InvalidInput("matcher training: record with empty identity");
        ids.emplace(r.identity, 0);
    }
    identities_out.clear();
    for (auto& [name, idx] : ids) {
        idx = int(identities_out.size());
        identities_out.push_back(name);
    }
    std::vector<TrainSample> out;
    for (const auto& r : records)
        for (const auto& imp : r.impressions)
            for (ImpressionKind k : kinds)
                if (imp.kind == k) {
                    out.push_back({imp.image, ids[r.identity]});
                    break;
                }
    if (out.empty()) throw DatasetEmpty("matcher training: no samples after kind filter");
    return out;
}

namespace detail {

// Softmax cross-entropy on raw logits; returns loss and writes dL/dlogits.
template <typename T>
double softmax_ce(const nn::Tensor<T>& logits, int target, T scale, nn::Tensor<T>& grad) {
    const int n = int(logits.v.size());
    double mx = double(logits.v[0]);
    for (auto v : logits.v) mx = std::max(mx, double(v));
    double denom = 0;
    for (auto v : logits.v) denom += std::exp(double(v) - mx);
    double logp = double(logits.v[target]) - mx - std::log(denom);
    grad = nn::Tensor<T>(logits.c, logits.h, logits.w);
    for (int i = 0; i < n; ++i) {
        double p = std::exp(double(logits.v[i]) - mx) / denom;
        grad.v[i] = T((p - (i == target ? 1.0 : 0.0))) * scale;
    }
    return -logp;
}

}  // namespace detail

// Identity-classification training with an optional augmentation-alignment
// head on the shared trunk. Mutates `net` in place; heads are discarded.
template <typename T>
void train_embedder(Embedder<T>& net, const std::vector<TrainSample>& samples, int n_identities,
                    const MatcherConfig& cfg) {
    if (cfg.epochs == 0) return;
    Rng head_rng(derive_seed(cfg.seed, 0x4ead));
    nn::Net<T> cls;
    cls.seq().add(std::make_unique<nn::Dense<T>>(net.spec.embedding_dim, n_identities, head_rng,
                                                 "m.cls"));
    cls.finalize();
    const bool align = cfg.alignment_weight > 0 && cfg.augment;
    nn::Net<T> align_head;
    if (align) {
        align_head.seq().add(
            std::make_unique<nn::Dense<T>>(net.trunk_dim(), 3, head_rng, "m.align"));
        align_head.finalize();
    }

    std::vector<nn::ParamBlock<T>*> params = net.trunk.params();
    {
        auto hp = net.head.params();
        params.insert(params.end(), hp.begin(), hp.end());
        auto cp = cls.params();
        params.insert(params.end(), cp.begin(), cp.end());
        if (align) {
            auto ap = align_head.params();
            params.insert(params.end(), ap.begin(), ap.end());
        }
    }
    nn::Adam<T> opt(params, cfg.lr, cfg.beta1, cfg.beta2);

    std::vector<int> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, 0x3a0c, std::uint64_t(epoch)));
        erng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            T scale = T(1) / T(end - start);
            net.trunk.zero_grad();
            net.head.zero_grad();
            cls.zero_grad();
            if (align) align_head.zero_grad();
            for (std::size_t s = start; s < end; ++s) {
                const TrainSample& smp = samples[order[s]];
                FingerprintImage img = smp.img;
                double tx = 0, ty = 0, tr = 0;
                if (cfg.augment) {
                    std::uint64_t aseed =
                        derive_seed(cfg.seed, 0xa19, std::uint64_t(epoch) * 1000003 + s);
                    DrawnAugment d = draw_augment(cfg.augment_cfg, img.width, aseed);
                    img = warp_translate_rotate(img, d.dx, d.dy, d.theta_deg);
                    // Targets normalized to [-1, 1] by the configured maxima.
                    if (cfg.augment_cfg.max_translate_px > 0) {
                        double bound = double(cfg.augment_cfg.max_translate_px) * img.width /
                                       double(std::max(1, cfg.augment_cfg.native_size));
                        if (bound > 0) {
                            tx = d.dx / bound;
                            ty = d.dy / bound;
                        }
                    }
                    if (cfg.augment_cfg.max_rotate_deg > 0)
                        tr = d.theta_deg / cfg.augment_cfg.max_rotate_deg;
                }
                nn::Tensor<T> x = net.to_input(img);
                nn::Tensor<T> t = net.trunk.forward(x);
                nn::Tensor<T> e = net.head.forward(t);
                nn::Tensor<T> logits = cls.forward(e);
                nn::Tensor<T> dlogits;
                detail::softmax_ce(logits, smp.identity_index, scale, dlogits);
                nn::Tensor<T> de = cls.backward(dlogits);
                nn::Tensor<T> dt = net.head.backward(de);
                if (align) {
                    nn::Tensor<T> a = align_head.forward(t);
                    double targets[3] = {tx, ty, tr};
                    nn::Tensor<T> da(a.c, a.h, a.w);
                    for (int i = 0; i < 3; ++i)
                        da.v[i] = T(2.0 / 3.0 * (double(a.v[i]) - targets[i]) *
                                    cfg.alignment_weight) *
                                  scale;
                    nn::Tensor<T> dt2 = align_head.backward(da);
                    for (std::size_t i = 0; i < dt.v.size(); ++i) dt.v[i] += dt2.v[i];
                }
                net.trunk.backward(dt);
            }
            opt.step();
        }
    }
    if (!net.trunk.params_finite() || !net.head.params_finite())
        throw Error("matcher training diverged to non-finite weights");
}

// Fresh embedder trained from scratch (rolled-only stand-in corpus).
template <typename T = float>
Embedder<T> pretrain(const std::vector<FingerRecord>& records, const MatcherConfig& cfg) {
    cfg.validate();
    Embedder<T> net;
    net.spec = cfg.net;
    Rng rng(derive_seed(cfg.seed, 0x9e7));
    net.build(rng);
    std::vector<std::string> identities;
    auto samples = samples_from_records(records, {ImpressionKind::Rolled}, identities);
    train_embedder(net, samples, int(identities.size()), cfg);
    return net;
}

// Fine-tune a copy of `base` on mated (rolled, latent-or-synthetic) pairs.
// The base is left untouched; 0 epochs returns an exact copy.
template <typename T = float>
Embedder<T> finetune(const Embedder<T>& base, const MatedPairSet& pairs,
                     const MatcherConfig& cfg) {
    cfg.validate();
    if (!(base.spec == cfg.net))
        throw InvalidInput("finetune: cfg.net does not match the base embedder architecture");
    Embedder<T> net;
    net.spec = base.spec;
    Rng rng(derive_seed(cfg.seed, 0x9e8));
    net.build(rng);
    net.copy_weights_from(base);
    if (cfg.epochs == 0) return net;

    std::map<std::string, int> ids;
    for (const auto& p : pairs.pairs) {
        if (p.identity.empty()) throw InvalidInput("finetune: pair with empty identity");
        ids.emplace(p.identity, 0);
    }
    if (ids.empty()) throw DatasetEmpty("finetune: no pairs");
    int next = 0;
    for (auto& [name, idx] : ids) idx = next++;
    std::vector<TrainSample> samples;
    for (const auto& p : pairs.pairs) {
        samples.push_back({p.rolled, ids[p.identity]});
        samples.push_back({p.latent, ids[p.identity]});
    }
    train_embedder(net, samples, next, cfg);
    return net;
}

}  // namespace slp::match
