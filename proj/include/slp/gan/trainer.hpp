#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "slp/config.hpp"
#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/gan/losses.hpp"
#include "slp/gan/nets.hpp"
#include "slp/gan/style_model.hpp"
#include "slp/imgproc.hpp"
#include "slp/nn/adam.hpp"
#include "slp/rng.hpp"

namespace slp::gan {

struct TrainConfig {
    double beta1 = 0.5;
    double beta2 = 0.999;
    double lr_g = 0.0003;
    double lr_d = 0.0001;
    double cycle_weight = 10.0;
    int patience = 50;
    int max_epochs = 200;
    int batch_size = 1;
    std::uint64_t seed = 1;
    int residual_blocks = 6;
    int base_channels = 64;
    double leaky_slope = 0.2;
    bool replay_buffer = true;
    bool augment = true;
    AugmentConfig augment_cfg;
    std::string diagnostics_dir;  // abort checkpoints land here when set
    std::function<void(const EpochLoss&)> on_epoch;  // progress hook, not serialized

    static TrainConfig from_config(const Config& c) {
        TrainConfig t;
        t.beta1 = c.get_double("gan.beta1", t.beta1);
        t.beta2 = c.get_double("gan.beta2", t.beta2);
        t.lr_g = c.get_double("gan.lr_g", t.lr_g);
        t.lr_d = c.get_double("gan.lr_d", t.lr_d);
        t.cycle_weight = c.get_double("gan.cycle_weight", t.cycle_weight);
        t.patience = int(c.get_int("gan.patience", t.patience));
        t.max_epochs = int(c.get_int("gan.max_epochs", t.max_epochs));
        t.batch_size = int(c.get_int("gan.batch_size", t.batch_size));
        t.residual_blocks = int(c.get_int("gan.residual_blocks", t.residual_blocks));
        t.base_channels = int(c.get_int("gan.base_channels", t.base_channels));
        t.leaky_slope = c.get_double("gan.leaky_slope", t.leaky_slope);
        t.replay_buffer = c.get_bool("gan.replay_buffer", t.replay_buffer);
        t.augment = c.get_bool("gan.augment", t.augment);
        t.seed = std::uint64_t(c.get_int("gan.seed", std::int64_t(t.seed)));
        t.augment_cfg.max_translate_px = c.get_double("augment.max_translate_px",
                                                      t.augment_cfg.max_translate_px);
        t.augment_cfg.max_rotate_deg = c.get_double("augment.max_rotate_deg",
                                                    t.augment_cfg.max_rotate_deg);
        t.augment_cfg.native_size = int(c.get_int("augment.native_size",
                                                  t.augment_cfg.native_size));
        return t;
    }

    std::string snapshot() const {
        char buf[1024];
        std::snprintf(buf, sizeof(buf),
                      "[gan]\n"
                      "augment = %s\n"
                      "base_channels = %d\n"
                      "batch_size = %d\n"
                      "beta1 = %.17g\n"
                      "beta2 = %.17g\n"
                      "cycle_weight = %.17g\n"
                      "leaky_slope = %.17g\n"
                      "lr_d = %.17g\n"
                      "lr_g = %.17g\n"
                      "max_epochs = %d\n"
                      "patience = %d\n"
                      "replay_buffer = %s\n"
                      "residual_blocks = %d\n"
                      "seed = %llu\n",
                      augment ? "true" : "false", base_channels, batch_size, beta1, beta2,
                      cycle_weight, leaky_slope, lr_d, lr_g, max_epochs, patience,
                      replay_buffer ? "true" : "false", residual_blocks,
                      static_cast<unsigned long long>(seed));
        return buf;
    }

    GeneratorSpec generator_spec() const {
        return GeneratorSpec{residual_blocks, leaky_slope, base_channels};
    }
};

// History of past generator outputs fed to the discriminators, so they do
// not chase only the newest fakes. Capacity 50; half the queries return a
// stored fake in place of the fresh one.
template <typename T>
class ImagePool {
public:
    explicit ImagePool(std::size_t capacity = 50, bool enabled = true)
        : capacity_(capacity), enabled_(enabled) {}

    nn::Tensor<T> query(const nn::Tensor<T>& fake, Rng& rng) {
        if (!enabled_ || capacity_ == 0) return fake;
        if (pool_.size() < capacity_) {
            pool_.push_back(fake);
            return fake;
        }
        if (rng.uniform() < 0.5) {
            std::size_t i = rng.uniform_int(pool_.size());
            nn::Tensor<T> old = pool_[i];
            pool_[i] = fake;
            return old;
        }
        return fake;
    }

private:
    std::size_t capacity_;
    bool enabled_;
    std::vector<nn::Tensor<T>> pool_;
};

template <typename T>
struct GenLossParts {
    T adv_g = T(0), adv_f = T(0), cyc_a = T(0), cyc_b = T(0), total = T(0);
};

// Forward-only evaluation of the generator objective on one (a, b) sample.
template <typename T>
GenLossParts<T> generator_loss_eval(nn::Net<T>& G, nn::Net<T>& F, DiscriminatorPair<T>& D_A,
                                    DiscriminatorPair<T>& D_B, const nn::Tensor<T>& a,
                                    const nn::Tensor<T>& b, T lambda) {
    GenLossParts<T> out;
    nn::Tensor<T> fake_b = G.forward(a);
    T gb = adversarial_losses(std::vector<T>{}, D_B.global.forward(fake_b).v, Side::Generator);
    T pb = adversarial_losses(std::vector<T>{}, D_B.patch.forward(fake_b).v, Side::Generator);
    out.adv_g = combined_adversarial(gb, pb);
    out.cyc_a = cycle_consistency_loss(a, F.forward(fake_b));
    nn::Tensor<T> fake_a = F.forward(b);
    T ga = adversarial_losses(std::vector<T>{}, D_A.global.forward(fake_a).v, Side::Generator);
    T pa = adversarial_losses(std::vector<T>{}, D_A.patch.forward(fake_a).v, Side::Generator);
    out.adv_f = combined_adversarial(ga, pa);
    out.cyc_b = cycle_consistency_loss(b, G.forward(fake_a));
    out.total = total_generator_loss(out.adv_g, out.adv_f, out.cyc_a, out.cyc_b, lambda);
    return out;
}

// One sample's contribution to the generator update: runs both translation
// directions, accumulates gradients into G and F scaled by `batch_scale`,
// and returns the loss parts. Discriminator gradients get polluted here;
// the discriminator phase zeroes them before its own update.
template <typename T>
GenLossParts<T> generator_pass(nn::Net<T>& G, nn::Net<T>& F, DiscriminatorPair<T>& D_A,
                               DiscriminatorPair<T>& D_B, const nn::Tensor<T>& a,
                               const nn::Tensor<T>& b, T lambda, T batch_scale) {
    GenLossParts<T> out;
    nn::Tensor<T> score_grad;

    // a -> G -> fake_b -> F -> rec_a
    {
        nn::Tensor<T> fake_b = G.forward(a);
        nn::Tensor<T> s_g = D_B.global.forward(fake_b);
        T term_g = generator_score_loss_grad(s_g, batch_scale / T(2), score_grad);
        nn::Tensor<T> d_fake = D_B.global.backward(score_grad);
        nn::Tensor<T> s_p = D_B.patch.forward(fake_b);
        T term_p = generator_score_loss_grad(s_p, batch_scale / T(2), score_grad);
        {
            nn::Tensor<T> d2 = D_B.patch.backward(score_grad);
            for (std::size_t i = 0; i < d_fake.v.size(); ++i) d_fake.v[i] += d2.v[i];
        }
        nn::Tensor<T> rec_a = F.forward(fake_b);
        out.cyc_a = cycle_consistency_loss(a, rec_a);
        {
            nn::Tensor<T> d_rec = cycle_consistency_grad(rec_a, a, T(lambda * batch_scale));
            nn::Tensor<T> d2 = F.backward(d_rec);
            for (std::size_t i = 0; i < d_fake.v.size(); ++i) d_fake.v[i] += d2.v[i];
        }
        G.backward(d_fake);
        out.adv_g = combined_adversarial(term_g, term_p);
    }

    // b -> F -> fake_a -> G -> rec_b
    {
        nn::Tensor<T> fake_a = F.forward(b);
        nn::Tensor<T> s_g = D_A.global.forward(fake_a);
        T term_g = generator_score_loss_grad(s_g, batch_scale / T(2), score_grad);
        nn::Tensor<T> d_fake = D_A.global.backward(score_grad);
        nn::Tensor<T> s_p = D_A.patch.forward(fake_a);
        T term_p = generator_score_loss_grad(s_p, batch_scale / T(2), score_grad);
        {
            nn::Tensor<T> d2 = D_A.patch.backward(score_grad);
            for (std::size_t i = 0; i < d_fake.v.size(); ++i) d_fake.v[i] += d2.v[i];
        }
        nn::Tensor<T> rec_b = G.forward(fake_a);
        out.cyc_b = cycle_consistency_loss(b, rec_b);
        {
            nn::Tensor<T> d_rec = cycle_consistency_grad(rec_b, b, T(lambda * batch_scale));
            nn::Tensor<T> d2 = G.backward(d_rec);
            for (std::size_t i = 0; i < d_fake.v.size(); ++i) d_fake.v[i] += d2.v[i];
        }
        F.backward(d_fake);
        out.adv_f = combined_adversarial(term_g, term_p);
    }

    out.total = total_generator_loss(out.adv_g, out.adv_f, out.cyc_a, out.cyc_b, lambda);
    return out;
}

template <typename T>
struct DiscLossParts {
    T global = T(0), patch = T(0);
};

// One sample's contribution to one domain discriminator pair. Each critic
// sees the real image and a (possibly replayed) fake; forward and backward
// are interleaved per critic so cached activations stay consistent.
template <typename T>
DiscLossParts<T> discriminator_pass(DiscriminatorPair<T>& D, const nn::Tensor<T>& real,
                                    const nn::Tensor<T>& fake, T batch_scale) {
    DiscLossParts<T> out;
    nn::Tensor<T> grad;
    {
        nn::Tensor<T> s = D.global.forward(real);
        T lr = disc_real_loss_grad(s, batch_scale, grad);
        D.global.backward(grad);
        s = D.global.forward(fake);
        T lf = disc_fake_loss_grad(s, batch_scale, grad);
        D.global.backward(grad);
        out.global = (lr + lf) / T(2);
    }
    {
        nn::Tensor<T> s = D.patch.forward(real);
        T lr = disc_real_loss_grad(s, batch_scale, grad);
        D.patch.backward(grad);
        s = D.patch.forward(fake);
        T lf = disc_fake_loss_grad(s, batch_scale, grad);
        D.patch.backward(grad);
        out.patch = (lr + lf) / T(2);
    }
    return out;
}

namespace detail {

template <typename T>
std::vector<std::vector<T>> dump_params(const nn::Net<T>& n) {
    std::vector<std::vector<T>> out;
    out.reserve(n.params().size());
    for (const auto* p : n.params()) out.push_back(p->w);
    return out;
}

template <typename T>
void restore_params(nn::Net<T>& n, const std::vector<std::vector<T>>& snap) {
    for (std::size_t i = 0; i < snap.size(); ++i) n.params()[i]->w = snap[i];
}

inline void check_domain(const DomainSet& d, const char* name) {
    if (d.images.empty()) throw DatasetEmpty(std::string("train_stage: domain ") + name +
                                             " is empty");
    const auto& first = d.images.front();
    if (first.width != first.height || first.width % 4 != 0)
        throw InvalidInput(std::string("train_stage: domain ") + name +
                           " images must be square with side divisible by 4 (got " +
                           std::to_string(first.width) + "x" + std::to_string(first.height) +
                           "); canonicalize first");
    for (const auto& img : d.images)
        if (img.width != first.width || img.height != first.height)
            throw InvalidInput(std::string("train_stage: domain ") + name +
                               " has mixed image sizes; canonicalize first");
}

}  // namespace detail

// Full two-generator adversarial training with on-the-fly augmentation and
// early stopping on the epoch-averaged total generator loss. Returns the
// best-by-monitored-loss checkpoint. Deterministic for a fixed seed.
template <typename T = float>
StyleModel<T> train_stage(const DomainSet& domain_A, const DomainSet& domain_B,
                          const TrainConfig& cfg, const StyleModel<T>* init = nullptr,
                          const std::string& model_id = "model", int cluster_index = -1) {
    detail::check_domain(domain_A, "A");
    detail::check_domain(domain_B, "B");
    if (cfg.max_epochs < 1) throw InvalidInput("train_stage: max_epochs must be >= 1");
    if (cfg.batch_size < 1) throw InvalidInput("train_stage: batch_size must be >= 1");

    StyleModel<T> model;
    model.model_id = model_id;
    model.cluster_index = cluster_index;
    model.spec = cfg.generator_spec();
    model.config_snapshot = cfg.snapshot();
    {
        Rng init_rng(derive_seed(cfg.seed, 0x1e17));
        model.build(init_rng);
    }
    if (init) {
        if (!(init->spec == model.spec))
            throw InvalidInput("train_stage: init checkpoint architecture (" +
                               std::to_string(init->spec.residual_blocks) + " blocks, " +
                               std::to_string(init->spec.base_channels) +
                               " channels) does not match the configured architecture");
        model.G.copy_weights_from(init->G);
        model.F.copy_weights_from(init->F);
    }

    DiscriminatorSpec dspec{cfg.base_channels};
    DiscriminatorPair<T> D_A, D_B;
    {
        Rng d_rng(derive_seed(cfg.seed, 0xd15c));
        D_A.build(dspec, d_rng);
        D_B.build(dspec, d_rng);
    }

    std::vector<nn::ParamBlock<T>*> gen_params = model.G.params();
    gen_params.insert(gen_params.end(), model.F.params().begin(), model.F.params().end());
    std::vector<nn::ParamBlock<T>*> disc_params = D_A.params();
    {
        auto db = D_B.params();
        disc_params.insert(disc_params.end(), db.begin(), db.end());
    }
    nn::Adam<T> opt_g(gen_params, cfg.lr_g, cfg.beta1, cfg.beta2);
    nn::Adam<T> opt_d(disc_params, cfg.lr_d, cfg.beta1, cfg.beta2);

    ImagePool<T> pool_a(50, cfg.replay_buffer), pool_b(50, cfg.replay_buffer);
    Rng pool_rng(derive_seed(cfg.seed, 0x900ded));

    const int nA = int(domain_A.images.size());
    const int nB = int(domain_B.images.size());
    const int batch = std::min(cfg.batch_size, std::min(nA, nB));
    const int steps = std::max(1, std::min(nA, nB) / batch);
    const T lambda = T(cfg.cycle_weight);
    const T batch_scale = T(1) / T(batch);

    std::vector<int> idx_a(nA), idx_b(nB);
    std::iota(idx_a.begin(), idx_a.end(), 0);
    std::iota(idx_b.begin(), idx_b.end(), 0);

    auto prep = [&](const FingerprintImage& img, std::uint64_t aug_seed) {
        if (!cfg.augment) return image_to_tensor<T>(img);
        return image_to_tensor<T>(augment(img, aug_seed, cfg.augment_cfg));
    };

    double best_loss = 0;
    int best_epoch = 0, since_best = 0;
    std::vector<std::vector<T>> best_g, best_f;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, 0xe90c, std::uint64_t(epoch)));
        erng.shuffle(idx_a);
        erng.shuffle(idx_b);

        EpochLoss row;
        row.epoch = epoch;
        for (int step = 0; step < steps; ++step) {
            std::vector<nn::Tensor<T>> as, bs;
            for (int j = 0; j < batch; ++j) {
                int ia = idx_a[(step * batch + j) % nA];
                int ib = idx_b[(step * batch + j) % nB];
                std::uint64_t sa =
                    derive_seed(cfg.seed, 0xa06, std::uint64_t(epoch) * 1000003 + step, j);
                std::uint64_t sb =
                    derive_seed(cfg.seed, 0xb06, std::uint64_t(epoch) * 1000003 + step, j);
                as.push_back(prep(domain_A.images[ia], sa));
                bs.push_back(prep(domain_B.images[ib], sb));
            }

            model.G.zero_grad();
            model.F.zero_grad();
            GenLossParts<T> gl;
            std::vector<nn::Tensor<T>> fakes_a, fakes_b;
            for (int j = 0; j < batch; ++j) {
                auto parts = generator_pass(model.G, model.F, D_A, D_B, as[j], bs[j], lambda,
                                            batch_scale);
                gl.adv_g += parts.adv_g;
                gl.adv_f += parts.adv_f;
                gl.cyc_a += parts.cyc_a;
                gl.cyc_b += parts.cyc_b;
                gl.total += parts.total;
                // Regenerate detached fakes for the discriminator phase.
                fakes_b.push_back(model.G.forward(as[j]));
                fakes_a.push_back(model.F.forward(bs[j]));
            }
            opt_g.step();

            D_A.zero_grad();
            D_B.zero_grad();
            DiscLossParts<T> da, db;
            for (int j = 0; j < batch; ++j) {
                nn::Tensor<T> qa = pool_a.query(fakes_a[j], pool_rng);
                nn::Tensor<T> qb = pool_b.query(fakes_b[j], pool_rng);
                auto pa = discriminator_pass(D_A, as[j], qa, batch_scale);
                auto pb = discriminator_pass(D_B, bs[j], qb, batch_scale);
                da.global += pa.global;
                da.patch += pa.patch;
                db.global += pb.global;
                db.patch += pb.patch;
            }
            opt_d.step();

            row.g_total += double(gl.total) / batch;
            row.cyc_a += double(gl.cyc_a) / batch;
            row.cyc_b += double(gl.cyc_b) / batch;
            row.d_a_global += double(da.global) / batch;
            row.d_a_patch += double(da.patch) / batch;
            row.d_b_global += double(db.global) / batch;
            row.d_b_patch += double(db.patch) / batch;
        }
        row.g_total /= steps;
        row.cyc_a /= steps;
        row.cyc_b /= steps;
        row.d_a_global /= steps;
        row.d_a_patch /= steps;
        row.d_b_global /= steps;
        row.d_b_patch /= steps;
        model.loss_log.push_back(row);
        if (cfg.on_epoch) cfg.on_epoch(row);

        bool finite = std::isfinite(row.g_total) && std::isfinite(row.cyc_a) &&
                      std::isfinite(row.cyc_b) && std::isfinite(row.d_a_global) &&
                      std::isfinite(row.d_a_patch) && std::isfinite(row.d_b_global) &&
                      std::isfinite(row.d_b_patch);
        if (!finite) {
            if (!cfg.diagnostics_dir.empty()) model.save(cfg.diagnostics_dir);
            throw Error("train_stage: non-finite loss at epoch " + std::to_string(epoch) +
                        (cfg.diagnostics_dir.empty()
                             ? std::string()
                             : "; diagnostic checkpoint written to " + cfg.diagnostics_dir));
        }

        if (best_epoch == 0 || row.g_total < best_loss) {
            best_loss = row.g_total;
            best_epoch = epoch;
            since_best = 0;
            best_g = detail::dump_params(model.G);
            best_f = detail::dump_params(model.F);
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    detail::restore_params(model.G, best_g);
    detail::restore_params(model.F, best_f);
    return model;
}

}  // namespace slp::gan
