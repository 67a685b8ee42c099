#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "slp/cluster/features.hpp"
#include "slp/cluster/kmeans.hpp"
#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/eval/roccmc.hpp"
#include "slp/gan/trainer.hpp"
#include "slp/manifest.hpp"
#include "slp/match/embedder.hpp"

namespace slp::pipeline {

using WarnFn = std::function<void(const std::string&)>;

// First stage: one coarse model over the full rolled/latent domains.
template <typename T = float>
gan::StyleModel<T> run_first_stage(const DomainSet& rolled, const DomainSet& latents,
                                   const gan::TrainConfig& cfg,
                                   const std::string& models_dir = "") {
    gan::StyleModel<T> model = gan::train_stage<T>(rolled, latents, cfg, nullptr, "coarse", -1);
    if (!models_dir.empty()) model.save(models_dir + "/" + model.model_id);
    return model;
}

// Second stage: cluster the latents by style, then fine-tune one model per
// cluster starting from the coarse weights, with max_epochs halved.
template <typename T = float>
std::vector<gan::StyleModel<T>> run_second_stage(
    const gan::StyleModel<T>& coarse, const DomainSet& rolled, const DomainSet& latents, int k,
    const gan::TrainConfig& cfg, const cluster::FeatureExtractor& extractor,
    bool l2norm = false, const std::string& models_dir = "", const WarnFn& warn = {}) {
    if (k < 1) throw InvalidInput("run_second_stage: k must be >= 1");
    if (latents.images.empty()) throw DatasetEmpty("run_second_stage: no latent images");

    auto features = cluster::extract_features(latents.images, extractor);
    if (l2norm) cluster::l2_normalize(features);
    cluster::ClusterAssignment assignment =
        cluster::kmeans_cluster(features, k, derive_seed(cfg.seed, 0xc125));
    std::vector<DomainSet> parts = cluster::partition_dataset(latents, assignment);

    if (!models_dir.empty()) {
        std::filesystem::create_directories(models_dir);
        cluster::write_assignment_csv(assignment, models_dir + "/cluster-assignment.csv");
        cluster::write_centroids(assignment, models_dir + "/cluster-centroids.bin");
    }

    std::vector<gan::StyleModel<T>> models;
    for (int j = 0; j < k; ++j) {
        const DomainSet& part = parts[j];
        if (part.images.empty())
            throw Error("run_second_stage: cluster " + std::to_string(j) + " is empty");
        gan::TrainConfig fine = cfg;
        fine.max_epochs = std::max(1, cfg.max_epochs / 2);
        fine.seed = derive_seed(cfg.seed, 0xf17e, std::uint64_t(j));
        if (int(part.images.size()) < cfg.batch_size) {
            if (warn)
                warn("cluster " + std::to_string(j) + " has only " +
                     std::to_string(part.images.size()) + " images (< batch_size " +
                     std::to_string(cfg.batch_size) + "); clamping batch size");
            fine.batch_size = int(part.images.size());
        }
        if (warn)
            warn("cluster " + std::to_string(j) + ": " + std::to_string(part.images.size()) +
                 " latent images");
        std::string model_id = "style" + std::to_string(j);
        gan::StyleModel<T> m = gan::train_stage<T>(rolled, part, fine, &coarse, model_id, j);
        if (!models_dir.empty()) m.save(models_dir + "/" + model_id);
        models.push_back(std::move(m));
    }
    return models;
}

// Anything that turns a rolled print into a latent-style image. Lets the
// synthesis/tiering plumbing run on either trained models or controlled
// degradation stubs.
class LatentSynthesizer {
public:
    virtual ~LatentSynthesizer() = default;
    virtual std::string id() const = 0;
    virtual int cluster_index() const { return -1; }
    virtual FingerprintImage synthesize(const FingerprintImage& rolled) = 0;
};

template <typename T = float>
class StyleModelSynthesizer : public LatentSynthesizer {
public:
    explicit StyleModelSynthesizer(gan::StyleModel<T>& model) : model_(model) {}
    std::string id() const override { return model_.model_id; }
    int cluster_index() const override { return model_.cluster_index; }
    FingerprintImage synthesize(const FingerprintImage& rolled) override {
        return model_.translate(rolled, gan::Direction::RolledToLatent);
    }

private:
    gan::StyleModel<T>& model_;
};

struct SynthesisResult {
    std::vector<FingerprintImage> images;
    SynthesisManifest manifest;
};

// Every selected rolled print is translated by every synthesizer. Manifest
// entries are sorted by (source id, model id); identities are inherited by
// construction since the synthetic id is derived from its source record.
inline SynthesisResult synthesize_set(const std::vector<LatentSynthesizer*>& models,
                                      const std::vector<FingerRecord>& rolled, int per_model,
                                      std::uint64_t seed) {
    if (models.empty()) throw InvalidInput("synthesize_set: no models");
    struct Source {
        std::string identity;
        const FingerprintImage* img;
    };
    std::vector<Source> sources;
    for (const auto& r : rolled) {
        const FingerprintImage* img = r.first_of(ImpressionKind::Rolled);
        if (img) sources.push_back({r.identity, img});
    }
    if (sources.empty()) throw InvalidInput("synthesize_set: no rolled impressions in input");
    std::sort(sources.begin(), sources.end(),
              [](const Source& a, const Source& b) { return a.img->id < b.img->id; });
    if (per_model > 0 && per_model < int(sources.size())) sources.resize(per_model);

    SynthesisResult out;
    for (const auto& src : sources) {
        for (auto* model : models) {
            ManifestEntry e;
            e.source_rolled_id = src.img->id;
            e.model_id = model->id();
            e.cluster_index = model->cluster_index();
            e.synthetic_id = src.img->id + "__" + model->id();
            e.seed = derive_seed(seed, 0x5f9, std::uint64_t(out.manifest.entries.size()));
            FingerprintImage synth = model->synthesize(*src.img);
            synth.id = e.synthetic_id;
            out.images.push_back(std::move(synth));
            out.manifest.entries.push_back(std::move(e));
        }
    }
    // Sources are sorted and models keep call order; enforce the documented
    // (source, model) ordering even if a caller passes unsorted models.
    std::vector<std::size_t> order(out.manifest.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = out.manifest.entries[a];
        const auto& eb = out.manifest.entries[b];
        if (ea.source_rolled_id != eb.source_rolled_id)
            return ea.source_rolled_id < eb.source_rolled_id;
        return ea.model_id < eb.model_id;
    });
    SynthesisResult sorted;
    for (std::size_t i : order) {
        sorted.images.push_back(std::move(out.images[i]));
        sorted.manifest.entries.push_back(std::move(out.manifest.entries[i]));
    }
    auto violations = sorted.manifest.violations();
    if (!violations.empty())
        throw Error("synthesize_set produced an invalid manifest: " + violations.front());
    return sorted;
}

// Attaches synthetic latents back onto their source records as impressions,
// so mated-pair construction and matcher training can consume them.
inline std::vector<FingerRecord> records_with_synthetics(
    const std::vector<FingerRecord>& records, const SynthesisManifest& manifest,
    const std::vector<FingerprintImage>& images) {
    std::map<std::string, const FingerprintImage*> by_id;
    for (const auto& img : images) by_id[img.id] = &img;
    std::map<std::string, std::string> identity_of_rolled;
    for (const auto& r : records)
        for (const auto& imp : r.impressions)
            if (imp.kind == ImpressionKind::Rolled) identity_of_rolled[imp.image.id] = r.identity;
    std::vector<FingerRecord> out = records;
    std::map<std::string, FingerRecord*> rec_of;
    for (auto& r : out) rec_of[r.identity] = &r;
    for (const auto& e : manifest.entries) {
        auto idit = identity_of_rolled.find(e.source_rolled_id);
        if (idit == identity_of_rolled.end())
            throw InvalidInput("manifest source " + e.source_rolled_id +
                               " not found among rolled impressions");
        auto imgit = by_id.find(e.synthetic_id);
        if (imgit == by_id.end())
            throw InvalidInput("manifest entry " + e.synthetic_id + " has no matching image");
        rec_of[idit->second]->impressions.push_back(
            {*imgit->second, ImpressionKind::SyntheticLatent});
    }
    return out;
}

// Per-model genuine/impostor scores against the evaluation gallery.
struct ModelRocScores {
    std::string model_id;
    std::vector<double> genuine;
    std::vector<double> impostor;
};

// Orders model ids best to worst by TDR at the given FAR. The primary key
// depends only on score order; exact TDR ties break by mean genuine score,
// then by model id.
inline std::vector<std::string> tier_ranking(const std::vector<ModelRocScores>& scores,
                                             double far) {
    struct Ranked {
        std::string model_id;
        double tdr = 0;
        double mean_genuine = 0;
    };
    std::vector<Ranked> ranking;
    for (const auto& ms : scores) {
        if (ms.genuine.empty()) throw InvalidInput("tier_ranking: model " + ms.model_id +
                                                   " has no genuine scores");
        Ranked r;
        r.model_id = ms.model_id;
        r.tdr = eval::roc_tdr_at_far(ms.genuine, ms.impostor, far);
        double s = 0;
        for (double g : ms.genuine) s += g;
        r.mean_genuine = s / double(ms.genuine.size());
        ranking.push_back(r);
    }
    std::sort(ranking.begin(), ranking.end(), [](const Ranked& a, const Ranked& b) {
        if (a.tdr != b.tdr) return a.tdr > b.tdr;
        if (a.mean_genuine != b.mean_genuine) return a.mean_genuine > b.mean_genuine;
        return a.model_id < b.model_id;
    });
    std::vector<std::string> out;
    for (const auto& r : ranking) out.push_back(r.model_id);
    return out;
}

// Ranks exactly three models by TDR at the configured FAR on synthetic
// latents from the evaluation pairs: best = Good, middle = Bad, worst = Ugly.
template <typename T>
std::map<std::string, QualityTier> assign_tiers(const std::vector<LatentSynthesizer*>& models,
                                                const MatedPairSet& eval_pairs,
                                                match::Embedder<T>& matcher,
                                                double far = 0.001) {
    if (models.size() != 3)
        throw InvalidInput("assign_tiers: tiering is defined for exactly 3 models, got " +
                           std::to_string(models.size()));
    if (eval_pairs.pairs.empty()) throw InvalidInput("assign_tiers: no evaluation pairs");

    const int S = matcher.spec.input_size;
    auto prep = [&](const FingerprintImage& img) {
        return (img.width == S && img.height == S) ? img : resize_bilinear(img, S, S);
    };

    std::vector<match::EmbeddingVector> rolled_emb;
    rolled_emb.reserve(eval_pairs.pairs.size());
    for (const auto& p : eval_pairs.pairs) rolled_emb.push_back(matcher.embed(prep(p.rolled)));

    std::vector<ModelRocScores> scores;
    for (auto* model : models) {
        ModelRocScores ms;
        ms.model_id = model->id();
        for (std::size_t i = 0; i < eval_pairs.pairs.size(); ++i) {
            FingerprintImage synth = model->synthesize(eval_pairs.pairs[i].rolled);
            match::EmbeddingVector se = matcher.embed(prep(synth));
            for (std::size_t j = 0; j < rolled_emb.size(); ++j) {
                double v = match::match_score(se, rolled_emb[j]).value;
                bool same = eval_pairs.pairs[i].identity == eval_pairs.pairs[j].identity;
                (same ? ms.genuine : ms.impostor).push_back(v);
            }
        }
        scores.push_back(std::move(ms));
    }
    std::vector<std::string> order = tier_ranking(scores, far);
    return {{order[0], QualityTier::Good},
            {order[1], QualityTier::Bad},
            {order[2], QualityTier::Ugly}};
}

inline void apply_tiers(SynthesisManifest& manifest,
                        const std::map<std::string, QualityTier>& tiers) {
    for (auto& e : manifest.entries) {
        auto it = tiers.find(e.model_id);
        if (it == tiers.end())
            throw InvalidInput("apply_tiers: no tier for model " + e.model_id);
        e.tier = it->second;
    }
}

// runs/<run_id>/{models/, synth/, manifest.jsonl, logs/}
struct RunDirs {
    std::string root;
    std::string models;
    std::string synth;
    std::string logs;
    std::string manifest_path;
};

inline RunDirs make_run_dirs(const std::string& out_root, const std::string& run_id) {
    namespace fs = std::filesystem;
    RunDirs d;
    d.root = out_root + "/runs/" + run_id;
    d.models = d.root + "/models";
    d.synth = d.root + "/synth";
    d.logs = d.root + "/logs";
    d.manifest_path = d.root + "/manifest.jsonl";
    std::error_code ec;
    fs::create_directories(d.models, ec);
    if (!ec) fs::create_directories(d.synth, ec);
    if (!ec) fs::create_directories(d.logs, ec);
    if (ec) throw IoError("cannot create run directory tree under " + d.root);
    return d;
}

}  // namespace slp::pipeline
