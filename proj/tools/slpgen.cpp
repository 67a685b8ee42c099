// slpgen: command-line front end for the synthetic latent fingerprint
// pipeline. One config file drives every subcommand; runs are laid out as
// <out>/runs/<run.id>/{models,synth,logs,manifest.jsonl}.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slp/slp.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
};

slp::Config load_config(const GlobalArgs& g) {
    slp::Config cfg =
        g.config_path.empty() ? slp::Config() : slp::Config::from_file(g.config_path);
    for (const auto& s : g.sets) cfg.set_override(s);
    return cfg;
}

// Module seed precedence: --seed flag, then the module key, then run.seed.
std::uint64_t resolve_seed(const GlobalArgs& g, const slp::Config& cfg,
                           const std::string& module_key) {
    if (g.seed) return *g.seed;
    std::int64_t run_seed = cfg.get_int("run.seed", 1);
    return std::uint64_t(cfg.get_int(module_key, run_seed));
}

// Line-delimited JSON event log; content carries no wall-clock so identical
// runs produce identical logs.
class EventLog {
public:
    EventLog(const std::string& logs_dir, const std::string& cmd) {
        fs::create_directories(logs_dir);
        path_ = logs_dir + "/" + cmd + ".jsonl";
        out_.open(path_, std::ios::binary | std::ios::trunc);
        if (!out_) throw slp::IoError("cannot open event log '" + path_ + "'");
    }

    void emit(json j) {
        out_ << j.dump() << '\n';
        out_.flush();
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

slp::pipeline::RunDirs run_dirs(const GlobalArgs& g, const slp::Config& cfg) {
    return slp::pipeline::make_run_dirs(g.out_dir, cfg.get_str("run.id", "run"));
}

std::vector<slp::FingerRecord> load_records(const slp::Config& cfg, const std::string& key) {
    std::string dir = cfg.require_str(key);
    return slp::load_dataset(dir, slp::DatasetLayout::from_config(cfg));
}

// Style model directories under models/, sorted by id: style0, style1, ...
// Falls back to the coarse model when no second stage ran.
std::vector<std::string> model_dirs(const std::string& models_dir) {
    std::vector<std::string> out;
    if (fs::is_directory(models_dir))
        for (const auto& e : fs::directory_iterator(models_dir))
            if (e.is_directory() && e.path().filename().string().rfind("style", 0) == 0)
                out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    if (out.empty() && fs::is_directory(models_dir + "/coarse"))
        out.push_back(models_dir + "/coarse");
    return out;
}

json epoch_event(const std::string& model_id, const slp::gan::EpochLoss& e) {
    return json{{"event", "epoch"},       {"model", model_id},
                {"epoch", e.epoch},       {"loss_g_total", e.g_total},
                {"loss_cyc_a", e.cyc_a},  {"loss_cyc_b", e.cyc_b},
                {"d_a_global", e.d_a_global}, {"d_a_patch", e.d_a_patch},
                {"d_b_global", e.d_b_global}, {"d_b_patch", e.d_b_patch}};
}

int cmd_train_coarse(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "train-coarse");

    auto rolled_recs = load_records(cfg, "data.rolled_dir");
    auto latent_recs = load_records(cfg, "data.latent_dir");
    slp::DomainSet rolled =
        slp::to_domain_set(rolled_recs, slp::ImpressionKind::Rolled, "rolled");
    slp::DomainSet latents =
        slp::to_domain_set(latent_recs, slp::ImpressionKind::Latent, "latent");

    slp::gan::TrainConfig tc = slp::gan::TrainConfig::from_config(cfg);
    tc.seed = resolve_seed(g, cfg, "gan.seed");
    tc.diagnostics_dir = dirs.logs;
    tc.on_epoch = [&](const slp::gan::EpochLoss& e) { log.emit(epoch_event("coarse", e)); };

    log.emit({{"event", "start"},
              {"cmd", "train-coarse"},
              {"seed", tc.seed},
              {"rolled", rolled.images.size()},
              {"latents", latents.images.size()}});
    auto model = slp::pipeline::run_first_stage<float>(rolled, latents, tc, dirs.models);
    log.emit({{"event", "done"},
              {"model", model.model_id},
              {"epochs", model.loss_log.size()},
              {"path", dirs.models + "/coarse"}});
    std::cout << "trained coarse model (" << model.loss_log.size() << " epochs) -> "
              << dirs.models << "/coarse\n";
    return 0;
}

int cmd_cluster(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "cluster");

    auto latent_recs = load_records(cfg, "data.latent_dir");
    slp::DomainSet latents =
        slp::to_domain_set(latent_recs, slp::ImpressionKind::Latent, "latent");
    if (latents.images.empty()) throw slp::DatasetEmpty("cluster: no latent images");

    auto extractor = slp::cluster::make_extractor(cfg);
    auto features = slp::cluster::extract_features(latents.images, *extractor);
    if (cfg.get_bool("cluster.l2norm", false)) slp::cluster::l2_normalize(features);
    int k = int(cfg.get_int("cluster.k", 3));
    std::uint64_t seed = slp::derive_seed(resolve_seed(g, cfg, "gan.seed"), 0xc125);

    log.emit({{"event", "start"}, {"cmd", "cluster"}, {"k", k}, {"seed", seed},
              {"images", latents.images.size()}, {"extractor", extractor->name()}});
    auto assignment = slp::cluster::kmeans_cluster(features, k, seed);
    slp::cluster::write_assignment_csv(assignment, dirs.models + "/cluster-assignment.csv");
    slp::cluster::write_centroids(assignment, dirs.models + "/cluster-centroids.bin");
    std::ostringstream inertia;
    inertia << "iteration,inertia\n";
    for (std::size_t i = 0; i < assignment.inertia_history.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, assignment.inertia_history[i]);
        inertia << buf;
    }
    std::ofstream icsv(dirs.models + "/cluster-inertia.csv", std::ios::binary);
    icsv << inertia.str();

    auto sizes = assignment.cluster_sizes();
    log.emit({{"event", "done"},
              {"iterations", assignment.iterations},
              {"inertia", assignment.inertia()},
              {"sizes", sizes}});
    std::cout << "clustered " << latents.images.size() << " latents into " << k
              << " styles; sizes:";
    for (int s : sizes) std::cout << ' ' << s;
    std::cout << "\n";
    return 0;
}

int cmd_finetune_styles(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "finetune-styles");

    auto coarse = slp::gan::StyleModel<float>::load(dirs.models + "/coarse");
    auto rolled_recs = load_records(cfg, "data.rolled_dir");
    auto latent_recs = load_records(cfg, "data.latent_dir");
    slp::DomainSet rolled =
        slp::to_domain_set(rolled_recs, slp::ImpressionKind::Rolled, "rolled");
    slp::DomainSet latents =
        slp::to_domain_set(latent_recs, slp::ImpressionKind::Latent, "latent");

    slp::gan::TrainConfig tc = slp::gan::TrainConfig::from_config(cfg);
    tc.seed = resolve_seed(g, cfg, "gan.seed");
    tc.diagnostics_dir = dirs.logs;
    int k = int(cfg.get_int("cluster.k", 3));
    auto extractor = slp::cluster::make_extractor(cfg);
    bool l2 = cfg.get_bool("cluster.l2norm", false);

    std::string current = "style?";
    tc.on_epoch = [&](const slp::gan::EpochLoss& e) { log.emit(epoch_event(current, e)); };
    log.emit({{"event", "start"}, {"cmd", "finetune-styles"}, {"k", k}, {"seed", tc.seed}});

    // run_second_stage reseeds per cluster; track the active model for the
    // epoch events through the warn callback ordering (clusters are serial).
    int next = 0;
    auto warn = [&](const std::string& msg) {
        if (msg.rfind("cluster ", 0) == 0 && msg.find(": ") != std::string::npos &&
            msg.find("latent images") != std::string::npos)
            current = "style" + std::to_string(next++);
        log.emit({{"event", "note"}, {"msg", msg}});
    };
    auto styles = slp::pipeline::run_second_stage<float>(coarse, rolled, latents, k, tc,
                                                         *extractor, l2, dirs.models, warn);
    for (const auto& m : styles)
        log.emit({{"event", "model"}, {"model", m.model_id},
                  {"cluster", m.cluster_index}, {"epochs", m.loss_log.size()}});
    log.emit({{"event", "done"}, {"models", styles.size()}});
    std::cout << "fine-tuned " << styles.size() << " style models under " << dirs.models
              << "\n";
    return 0;
}

int cmd_synthesize(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "synthesize");

    auto rolled_recs = load_records(cfg, "data.rolled_dir");
    auto paths = model_dirs(dirs.models);
    if (paths.empty())
        throw slp::IoError("synthesize: no trained models under " + dirs.models);

    std::vector<slp::gan::StyleModel<float>> models;
    models.reserve(paths.size());
    for (const auto& p : paths) models.push_back(slp::gan::StyleModel<float>::load(p));
    std::vector<std::unique_ptr<slp::pipeline::StyleModelSynthesizer<float>>> wraps;
    std::vector<slp::pipeline::LatentSynthesizer*> synths;
    for (auto& m : models) {
        wraps.push_back(std::make_unique<slp::pipeline::StyleModelSynthesizer<float>>(m));
        synths.push_back(wraps.back().get());
    }

    int per_model = int(cfg.get_int("synthesis.per_model", 0));
    std::uint64_t seed = resolve_seed(g, cfg, "synthesis.seed");
    log.emit({{"event", "start"}, {"cmd", "synthesize"}, {"models", paths.size()},
              {"per_model", per_model}, {"seed", seed}});

    auto result = slp::pipeline::synthesize_set(synths, rolled_recs, per_model, seed);
    for (const auto& img : result.images)
        slp::write_png(img, dirs.synth + "/" + img.id + ".png");
    slp::write_manifest(result.manifest, dirs.manifest_path);

    log.emit({{"event", "done"}, {"images", result.images.size()},
              {"manifest", dirs.manifest_path}});
    std::cout << "synthesized " << result.images.size() << " latents from "
              << paths.size() << " models -> " << dirs.synth << "\n";
    return 0;
}

int cmd_assign_tiers(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "assign-tiers");

    auto paths = model_dirs(dirs.models);
    std::vector<slp::gan::StyleModel<float>> models;
    for (const auto& p : paths) models.push_back(slp::gan::StyleModel<float>::load(p));
    std::vector<std::unique_ptr<slp::pipeline::StyleModelSynthesizer<float>>> wraps;
    std::vector<slp::pipeline::LatentSynthesizer*> synths;
    for (auto& m : models) {
        wraps.push_back(std::make_unique<slp::pipeline::StyleModelSynthesizer<float>>(m));
        synths.push_back(wraps.back().get());
    }

    auto matcher = slp::match::Embedder<float>::load(cfg.require_str("matcher.checkpoint"));
    auto eval_recs = load_records(cfg, "data.eval_dir");
    auto pairs = slp::make_mated_pairs(eval_recs, "tiering", false);
    double far = cfg.get_double("tiering.far", 0.001);

    log.emit({{"event", "start"}, {"cmd", "assign-tiers"}, {"models", paths.size()},
              {"pairs", pairs.pairs.size()}, {"far", far}});
    auto tiers = slp::pipeline::assign_tiers(synths, pairs, matcher, far);

    std::ostringstream csv;
    csv << "model_id,tier\n";
    for (const auto& [mid, t] : tiers) csv << mid << ',' << slp::to_string(t) << '\n';
    std::ofstream tcsv(dirs.models + "/tiers.csv", std::ios::binary);
    tcsv << csv.str();

    if (fs::exists(dirs.manifest_path)) {
        auto manifest = slp::read_manifest(dirs.manifest_path);
        slp::pipeline::apply_tiers(manifest, tiers);
        slp::write_manifest(manifest, dirs.manifest_path);
    }
    for (const auto& [mid, t] : tiers) {
        log.emit({{"event", "tier"}, {"model", mid}, {"tier", slp::to_string(t)}});
        std::cout << mid << " -> " << slp::to_string(t) << "\n";
    }
    log.emit({{"event", "done"}});
    return 0;
}

int cmd_finetune_matcher(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "finetune-matcher");

    auto rolled_recs = load_records(cfg, "data.rolled_dir");
    slp::match::MatcherConfig mc = slp::match::MatcherConfig::from_config(cfg);
    mc.seed = resolve_seed(g, cfg, "matcher.seed");

    slp::match::Embedder<float> base;
    std::string ckpt = cfg.get_str("matcher.checkpoint", "");
    if (!ckpt.empty()) {
        base = slp::match::Embedder<float>::load(ckpt);
        mc.net = base.spec;
    } else {
        log.emit({{"event", "note"}, {"msg", "no matcher.checkpoint; pretraining"}});
        base = slp::match::pretrain<float>(rolled_recs, mc);
        base.save(dirs.models + "/matcher-pretrained.bin");
    }

    // Fine-tuning pairs: each rolled print with its synthetic latents whose
    // tier passes the filter (default keeps the degraded tiers only).
    auto manifest = slp::read_manifest(dirs.manifest_path);
    std::set<std::string> allowed;
    for (const auto& t : cfg.get_strs("matcher.tiers", {"bad", "ugly"}))
        allowed.insert(t);
    std::map<std::string, const slp::ManifestEntry*> entry_of;
    for (const auto& e : manifest.entries) entry_of[e.synthetic_id] = &e;

    std::vector<slp::FingerprintImage> synth_images;
    for (const auto& e : manifest.entries) {
        std::string tier = e.tier ? slp::to_string(*e.tier) : "unassigned";
        if (!allowed.count(tier)) continue;
        synth_images.push_back(
            slp::read_png(dirs.synth + "/" + e.synthetic_id + ".png", e.synthetic_id));
    }
    if (synth_images.empty())
        throw slp::InvalidInput("finetune-matcher: no synthetic images pass the tier filter");

    auto merged = slp::pipeline::records_with_synthetics(
        rolled_recs, [&] {
            slp::SynthesisManifest m;
            for (const auto& img : synth_images) m.entries.push_back(*entry_of.at(img.id));
            return m;
        }(), synth_images);

    slp::MatedPairSet pairs;
    pairs.name = "finetune";
    for (const auto& r : merged) {
        const slp::FingerprintImage* rolled = r.first_of(slp::ImpressionKind::Rolled);
        if (!rolled) continue;
        for (const auto& imp : r.impressions)
            if (imp.kind == slp::ImpressionKind::SyntheticLatent)
                pairs.pairs.push_back({r.identity, *rolled, imp.image});
    }

    log.emit({{"event", "start"}, {"cmd", "finetune-matcher"}, {"seed", mc.seed},
              {"pairs", pairs.pairs.size()}, {"epochs", mc.epochs}});
    auto fine = slp::match::finetune(base, pairs, mc);
    fine.save(dirs.models + "/matcher-finetuned.bin");
    log.emit({{"event", "done"}, {"path", dirs.models + "/matcher-finetuned.bin"}});
    std::cout << "fine-tuned matcher on " << pairs.pairs.size() << " pairs -> "
              << dirs.models << "/matcher-finetuned.bin\n";
    return 0;
}

// Splits a scores CSV (as written by write_scores_csv) into genuine and
// impostor lists using the label column.
void read_scores_csv(const std::string& path, bool use_norm, std::vector<double>& genuine,
                     std::vector<double>& impostor) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw slp::IoError("cannot open scores file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) ||
        line != "probe_id,gallery_id,model_id,raw_score,norm_score,label")
        throw slp::ParseError(path + ": missing or unexpected scores header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 6)
            throw slp::ParseError(path + ":" + std::to_string(lineno) + ": expected 6 fields");
        double v = std::stod(f[use_norm ? 4 : 3]);
        slp::match::ScoreLabel label = slp::match::score_label_from_string(f[5]);
        if (label == slp::match::ScoreLabel::Unknown)
            throw slp::InvalidInput(path + ":" + std::to_string(lineno) +
                                    ": unlabeled score cannot be evaluated");
        (label == slp::match::ScoreLabel::Genuine ? genuine : impostor).push_back(v);
    }
}

int cmd_evaluate(const GlobalArgs& g, const std::string& scores_arg, double far_arg,
                 const std::string& column) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "evaluate");

    std::string scores_path =
        !scores_arg.empty() ? scores_arg : cfg.require_str("eval.scores");
    double far = far_arg > 0 ? far_arg : cfg.get_double("eval.far", 0.001);
    bool use_norm = column == "norm";

    std::vector<double> genuine, impostor;
    read_scores_csv(scores_path, use_norm, genuine, impostor);
    double tdr = slp::eval::roc_tdr_at_far(genuine, impostor, far);

    // Full sweep over observed thresholds for the ROC curve.
    std::vector<double> all;
    all.insert(all.end(), genuine.begin(), genuine.end());
    all.insert(all.end(), impostor.begin(), impostor.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());
    std::ostringstream roc;
    roc << "threshold,far,tdr\n";
    for (double t : all) {
        auto frac_ge = [t](const std::vector<double>& v) {
            return double(v.end() - std::lower_bound(v.begin(), v.end(), t)) /
                   double(v.size());
        };
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", t, frac_ge(impostor),
                      frac_ge(genuine));
        roc << buf;
    }
    std::ofstream rcsv(dirs.logs + "/roc.csv", std::ios::binary);
    rcsv << roc.str();

    log.emit({{"event", "done"}, {"scores", scores_path}, {"far", far}, {"tdr", tdr},
              {"genuine", genuine.size()}, {"impostor", impostor.size()},
              {"roc_csv", dirs.logs + "/roc.csv"}});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", tdr);
    std::cout << "TDR@FAR=" << far << ": " << buf << " (" << genuine.size()
              << " genuine, " << impostor.size() << " impostor)\n";
    return 0;
}

int cmd_identify(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "identify");

    auto matcher = slp::match::Embedder<float>::load(cfg.require_str("matcher.checkpoint"));
    auto eval_recs = load_records(cfg, "data.eval_dir");
    std::vector<slp::FingerRecord> background;
    std::string bg_dir = cfg.get_str("data.background_dir", "");
    if (!bg_dir.empty())
        background = slp::load_dataset(bg_dir, slp::DatasetLayout::from_config(cfg));

    std::vector<slp::FingerprintImage> probes;
    for (const auto& r : eval_recs)
        for (const auto& imp : r.impressions)
            if (imp.kind == slp::ImpressionKind::Latent ||
                imp.kind == slp::ImpressionKind::SyntheticLatent)
                probes.push_back(imp.image);
    if (probes.empty()) throw slp::DatasetEmpty("identify: no latent probes in data.eval_dir");

    log.emit({{"event", "start"}, {"cmd", "identify"}, {"probes", probes.size()},
              {"mates", eval_recs.size()}, {"background", background.size()}});
    auto matrix = slp::eval::identify_1toN(probes, eval_recs, background, matcher);
    int max_rank = int(cfg.get_int("eval.max_rank", 20));
    auto cmc = slp::eval::cmc_ranks(matrix, max_rank);

    std::ostringstream ccsv;
    ccsv << "rank,rate\n";
    for (std::size_t i = 0; i < cmc.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i + 1, cmc[i]);
        ccsv << buf;
    }
    std::ofstream cf(dirs.logs + "/cmc.csv", std::ios::binary);
    cf << ccsv.str();

    // Flat score list; normalization is over the whole matrix.
    std::vector<slp::match::SimilarityScore> flat;
    flat.reserve(matrix.probes.size() * matrix.gallery.size());
    for (std::size_t p = 0; p < matrix.probes.size(); ++p)
        for (std::size_t q = 0; q < matrix.gallery.size(); ++q) {
            slp::match::SimilarityScore s;
            s.value = matrix.scores[p][q];
            s.probe_id = matrix.probes[p];
            s.gallery_id = matrix.gallery[q];
            s.label = matrix.mate_map.at(matrix.probes[p]) == matrix.gallery[q]
                          ? slp::match::ScoreLabel::Genuine
                          : slp::match::ScoreLabel::Impostor;
            flat.push_back(s);
        }
    auto norm = slp::match::minmax_normalize(flat);
    std::vector<slp::match::ScoreRow> rows;
    rows.reserve(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        slp::match::ScoreRow r;
        r.probe_id = flat[i].probe_id;
        r.gallery_id = flat[i].gallery_id;
        r.model_id = "matcher";
        r.raw_score = flat[i].value;
        r.norm_score = norm.scores[i].value;
        r.label = flat[i].label;
        rows.push_back(r);
    }
    slp::match::write_scores_csv(rows, dirs.logs + "/scores.csv");

    log.emit({{"event", "done"}, {"rank1", cmc.empty() ? 0.0 : cmc[0]},
              {"gallery", matrix.gallery.size()},
              {"cmc_csv", dirs.logs + "/cmc.csv"},
              {"scores_csv", dirs.logs + "/scores.csv"}});
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", cmc.empty() ? 0.0 : cmc[0]);
    std::cout << "Rank-1: " << buf << " over gallery of " << matrix.gallery.size() << "\n";
    return 0;
}

int cmd_report(const GlobalArgs& g) {
    slp::Config cfg = load_config(g);
    auto dirs = run_dirs(g, cfg);
    EventLog log(dirs.logs, "report");
    std::string report_dir = dirs.root + "/report";
    fs::create_directories(report_dir);

    if (!fs::exists(dirs.manifest_path))
        throw slp::IoError("report: no manifest at " + dirs.manifest_path +
                           " (run synthesize first)");
    auto manifest = slp::read_manifest(dirs.manifest_path);
    if (manifest.entries.empty()) throw slp::InvalidInput("report: manifest has no entries");

    std::vector<slp::FingerprintImage> images;
    images.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries)
        images.push_back(
            slp::read_png(dirs.synth + "/" + e.synthetic_id + ".png", e.synthetic_id));

    std::map<std::string, int> per_model;
    std::map<std::string, int> per_tier;
    std::map<std::string, std::string> tier_of;
    for (const auto& e : manifest.entries) {
        per_model[e.model_id]++;
        std::string t = e.tier ? slp::to_string(*e.tier) : "unassigned";
        per_tier[t]++;
        tier_of[e.synthetic_id] = t;
    }
    bool tiered = !per_tier.count("unassigned");

    // Quality histograms, one per tier (or one pooled when untiered).
    auto qcfg = slp::eval::QualityToolConfig::from_config(cfg);
    std::map<std::string, slp::eval::QualityHistogram> hists;
    std::map<std::string, std::vector<slp::FingerprintImage>> by_tier;
    for (const auto& img : images) by_tier[tier_of.at(img.id)].push_back(img);
    for (const auto& [tier, imgs] : by_tier) {
        auto h = slp::eval::quality_histogram(imgs, qcfg);
        std::ofstream qf(report_dir + "/quality-" + tier + ".csv", std::ios::binary);
        qf << slp::eval::quality_histogram_csv(h);
        hists.emplace(tier, std::move(h));
    }

    // Minutiae statistics per tier when tiers exist.
    std::string minutiae_section;
    if (tiered) {
        auto stats = slp::eval::minutiae_tier_stats(manifest, images);
        std::ostringstream mcsv;
        mcsv << "tier,count,mean,stddev\n";
        std::ostringstream msec;
        for (const auto& [tier, row] : stats.rows) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%s,%d,%.9g,%.9g\n", slp::to_string(tier),
                          row.count, row.mean, row.stddev);
            mcsv << buf;
            std::snprintf(buf, sizeof buf, "| %s | %d | %.2f | %.2f |\n",
                          slp::to_string(tier), row.count, row.mean, row.stddev);
            msec << buf;
        }
        std::ofstream mf(report_dir + "/minutiae.csv", std::ios::binary);
        mf << mcsv.str();
        minutiae_section = "## Minutiae counts per tier\n\n| tier | images | mean | stddev |\n|---|---|---|---|\n" +
                           msec.str() + "\nMonotone good >= bad >= ugly: " +
                           (stats.monotone() ? "yes" : "no") + "\n\n";
    }

    // Style-space scatter of the synthetic latents when enough samples exist.
    std::string tsne_note = "skipped (need at least 5 images)";
    if (images.size() >= 5) {
        auto extractor = slp::cluster::make_extractor(cfg);
        auto feats = slp::cluster::extract_features(images, *extractor);
        std::vector<std::vector<double>> vecs;
        for (auto& f : feats) vecs.push_back(f.values);
        int iters = int(cfg.get_int("report.tsne_iterations", 500));
        auto pts = slp::eval::tsne_embed(vecs, resolve_seed(g, cfg, "report.seed"), iters);
        std::ostringstream tcsv;
        tcsv << "image_id,model_id,tier,x,y\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%s,%s,%s,%.9g,%.9g\n", images[i].id.c_str(),
                          manifest.entries[i].model_id.c_str(),
                          tier_of.at(images[i].id).c_str(), pts[i][0], pts[i][1]);
            tcsv << buf;
        }
        std::ofstream tf(report_dir + "/tsne.csv", std::ios::binary);
        tf << tcsv.str();
        tsne_note = "report/tsne.csv";
    }

    std::ostringstream md;
    md << "# Synthesis run report\n\n";
    md << "Manifest: " << manifest.entries.size() << " synthetic latents\n\n";
    md << "## Images per model\n\n| model | images |\n|---|---|\n";
    for (const auto& [m, n] : per_model) md << "| " << m << " | " << n << " |\n";
    md << "\n## Images per tier\n\n| tier | images |\n|---|---|\n";
    for (const auto& [t, n] : per_tier) md << "| " << t << " | " << n << " |\n";
    md << "\n## Quality score means (" << slp::eval::to_string(hists.begin()->second.source)
       << ")\n\n| tier | images | mean |\n|---|---|---|\n";
    for (const auto& [tier, h] : hists) {
        double s = 0;
        for (const auto& q : h.scores) s += q.value;
        char buf[96];
        std::snprintf(buf, sizeof buf, "| %s | %zu | %.2f |\n", tier.c_str(),
                      h.scores.size(), h.scores.empty() ? 0.0 : s / double(h.scores.size()));
        md << buf;
    }
    md << "\n" << minutiae_section;
    md << "## Style scatter\n\n" << tsne_note << "\n";

    std::ofstream rf(report_dir + "/report.md", std::ios::binary);
    rf << md.str();
    log.emit({{"event", "done"}, {"report", report_dir + "/report.md"},
              {"images", images.size()}});
    std::cout << "report written to " << report_dir << "/report.md\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic latent fingerprint pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override run.seed for all modules");
    app.add_option("--config", g.config_path, "config file (TOML-style sections)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", g.out_dir, "output root (default: out)");
    app.add_option("--set", g.sets, "override a config key, e.g. --set gan.max_epochs=5")
        ->take_all();

    auto* train_coarse = app.add_subcommand(
        "train-coarse",
        "train the first-stage model on rolled vs latent domains\n"
        "config: run.id, run.seed, data.rolled_dir, data.latent_dir, data.pattern,\n"
        "        data.rolled_tag, data.latent_tag, data.default_ppi, gan.* (seed, lr_g,\n"
        "        lr_d, beta1, beta2, cycle_weight, patience, max_epochs, batch_size,\n"
        "        residual_blocks, base_channels, leaky_slope, replay_buffer, augment),\n"
        "        augment.max_translate_px, augment.max_rotate_deg, augment.native_size");
    auto* cluster_cmd = app.add_subcommand(
        "cluster",
        "cluster latent styles with k-means over texture features\n"
        "config: run.id, run.seed, data.latent_dir, cluster.k, cluster.extractor,\n"
        "        cluster.l2norm, gan.seed");
    auto* finetune_styles = app.add_subcommand(
        "finetune-styles",
        "fine-tune one model per style cluster from the coarse checkpoint\n"
        "config: as train-coarse plus cluster.k, cluster.extractor, cluster.l2norm");
    auto* synthesize = app.add_subcommand(
        "synthesize",
        "translate rolled prints through every trained model\n"
        "config: run.id, run.seed, data.rolled_dir, synthesis.per_model, synthesis.seed");
    auto* assign_tiers = app.add_subcommand(
        "assign-tiers",
        "rank the three style models into good/bad/ugly tiers by TDR\n"
        "config: run.id, data.eval_dir, matcher.checkpoint, tiering.far");
    auto* finetune_matcher = app.add_subcommand(
        "finetune-matcher",
        "fine-tune the matcher on synthetic mates from the manifest\n"
        "config: run.id, data.rolled_dir, matcher.* (seed, checkpoint, tiers,\n"
        "        alignment_weight, input_size, base_channels, embedding_dim, epochs,\n"
        "        batch_size, lr, beta1, beta2, augment), augment.*");
    auto* evaluate = app.add_subcommand(
        "evaluate",
        "verification metrics from a scores CSV\n"
        "config: run.id, eval.scores, eval.far");
    auto* identify = app.add_subcommand(
        "identify",
        "closed-set 1:N identification of latent probes\n"
        "config: run.id, data.eval_dir, data.background_dir, matcher.checkpoint,\n"
        "        eval.max_rank");
    auto* report = app.add_subcommand(
        "report",
        "summarize a synthesis run: counts, quality, minutiae, style scatter\n"
        "config: run.id, quality.nfiq2_path, quality.work_dir, cluster.extractor,\n"
        "        report.tsne_iterations, report.seed");

    std::string scores_arg, column = "raw";
    double far_arg = 0;
    evaluate->add_option("--scores", scores_arg, "scores CSV (overrides eval.scores)");
    evaluate->add_option("--far", far_arg, "target false accept rate (overrides eval.far)");
    evaluate->add_option("--column", column, "score column: raw or norm")
        ->check(CLI::IsMember({"raw", "norm"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (*seed_opt) g.seed = seed_val;

    try {
        if (*train_coarse) return cmd_train_coarse(g);
        if (*cluster_cmd) return cmd_cluster(g);
        if (*finetune_styles) return cmd_finetune_styles(g);
        if (*synthesize) return cmd_synthesize(g);
        if (*assign_tiers) return cmd_assign_tiers(g);
        if (*finetune_matcher) return cmd_finetune_matcher(g);
        if (*evaluate) return cmd_evaluate(g, scores_arg, far_arg, column);
        if (*identify) return cmd_identify(g);
        if (*report) return cmd_report(g);
    } catch (const slp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const slp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
