#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/imgproc.hpp"
#include "slp/match/embedder.hpp"
#include "slp/match/train.hpp"
#include "slp/synthfp.hpp"

using namespace slp;
namespace fs = std::filesystem;

namespace {

// Identity corpus at embedder scale: rolled plus one degraded latent each.
std::vector<FingerRecord> tiny_records(int n, int size, std::uint64_t seed) {
    RidgePatternParams rp;
    rp.size = size;
    std::vector<FingerprintImage> rolled = make_identities(n, seed, rp);
    std::vector<FingerRecord> out;
    for (std::size_t i = 0; i < rolled.size(); ++i) {
        FingerRecord r;
        r.identity = rolled[i].id;
        FingerprintImage lat =
            apply_degradation(rolled[i], DegradationParams::bad(), derive_seed(seed, 0xde, i));
        r.impressions.push_back({rolled[i], ImpressionKind::Rolled});
        r.impressions.push_back({lat, ImpressionKind::Latent});
        out.push_back(std::move(r));
    }
    return out;
}

match::MatcherConfig tiny_cfg(int size) {
    match::MatcherConfig cfg;
    cfg.net.input_size = size;
    cfg.net.base_channels = 2;
    cfg.net.embedding_dim = 16;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.augment = false;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("embeddings are unit length and deterministic") {
    Rng rng(81);
    match::Embedder<float> emb;
    emb.spec = {32, 2, 16};
    emb.build(rng);

    RidgePatternParams rp;
    rp.size = 32;
    FingerprintImage img = generate_rolled_print(3, "q", rp);
    match::EmbeddingVector a = emb.embed(img);
    REQUIRE(int(a.values.size()) == 16);
    CHECK(a.source_id == "q");
    CHECK_THAT(a.norm(), Catch::Matchers::WithinAbs(1.0, 1e-5));

    match::EmbeddingVector b = emb.embed(img);
    CHECK(a.values == b.values);

    SECTION("wrong input size is rejected with the offending id") {
        FingerprintImage small("tiny", 16, 16, 500);
        CHECK_THROWS_AS(emb.embed(small), InvalidInput);
    }

    SECTION("input size must be a positive multiple of 16") {
        match::Embedder<float> bad;
        bad.spec = {24, 2, 16};
        Rng r2(1);
        CHECK_THROWS_AS(bad.build(r2), InvalidInput);
    }
}

TEST_CASE("cosine match score hits its anchor values") {
    match::EmbeddingVector a{"a", {1.0, 0.0}};
    match::EmbeddingVector b{"b", {1.0, 0.0}};
    match::EmbeddingVector c{"c", {0.0, 1.0}};
    match::EmbeddingVector d{"d", {-1.0, 0.0}};

    match::SimilarityScore s = match::match_score(a, b);
    CHECK_THAT(s.value, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(s.probe_id == "a");
    CHECK(s.gallery_id == "b");
    CHECK_THAT(match::match_score(a, c).value, Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(match::match_score(a, d).value, Catch::Matchers::WithinAbs(-1.0, 1e-12));

    SECTION("symmetric up to the id bookkeeping") {
        match::EmbeddingVector u{"u", {0.6, 0.8}};
        match::EmbeddingVector v{"v", {0.8, 0.6}};
        CHECK_THAT(match::match_score(u, v).value,
                   Catch::Matchers::WithinAbs(match::match_score(v, u).value, 1e-12));
    }

    SECTION("dimension mismatch throws") {
        match::EmbeddingVector w{"w", {1.0, 0.0, 0.0}};
        CHECK_THROWS_AS(match::match_score(a, w), InvalidInput);
    }
}

TEST_CASE("record flattening filters by impression kind and labels by identity") {
    auto records = tiny_records(3, 32, 91);
    std::vector<std::string> identities;
    auto rolled_only =
        match::samples_from_records(records, {ImpressionKind::Rolled}, identities);
    CHECK(rolled_only.size() == 3);
    REQUIRE(identities.size() == 3);
    CHECK(identities[0] < identities[1]);

    auto both = match::samples_from_records(
        records, {ImpressionKind::Rolled, ImpressionKind::Latent}, identities);
    CHECK(both.size() == 6);
    for (const auto& s : both) {
        CHECK(s.identity_index >= 0);
        CHECK(s.identity_index < 3);
    }

    auto none = std::vector<ImpressionKind>{ImpressionKind::SyntheticLatent};
    CHECK_THROWS_AS(match::samples_from_records(records, none, identities), DatasetEmpty);
}

TEST_CASE("pretraining yields a working embedder and is seed deterministic") {
    auto records = tiny_records(4, 32, 92);
    auto cfg = tiny_cfg(32);

    auto net = match::pretrain<float>(records, cfg);
    auto e = net.embed(records[0].impressions[0].image);
    CHECK_THAT(e.norm(), Catch::Matchers::WithinAbs(1.0, 1e-5));

    auto net2 = match::pretrain<float>(records, cfg);
    auto e2 = net2.embed(records[0].impressions[0].image);
    CHECK(e.values == e2.values);

    SECTION("alignment presets train as well") {
        for (double w : {0.035, 0.018, 0.007}) {
            auto acfg = cfg;
            acfg.alignment_weight = w;
            acfg.augment = true;
            acfg.augment_cfg.native_size = 32;
            acfg.epochs = 1;
            auto anet = match::pretrain<float>(records, acfg);
            CHECK(anet.trunk.params_finite());
        }
    }

    SECTION("negative alignment weight is rejected") {
        auto bad = cfg;
        bad.alignment_weight = -0.1;
        CHECK_THROWS_AS(match::pretrain<float>(records, bad), InvalidInput);
    }
}

TEST_CASE("finetuning with zero epochs copies the base exactly") {
    auto records = tiny_records(3, 32, 93);
    auto cfg = tiny_cfg(32);
    auto base = match::pretrain<float>(records, cfg);

    MatedPairSet pairs = make_mated_pairs(records, "eval");
    REQUIRE(pairs.pairs.size() == 3);

    auto zero = cfg;
    zero.epochs = 0;
    auto copy = match::finetune(base, pairs, zero);
    auto eb = base.embed(records[1].impressions[0].image);
    auto ec = copy.embed(records[1].impressions[0].image);
    CHECK(eb.values == ec.values);

    SECTION("spec mismatch between base and config throws") {
        auto other = cfg;
        other.net.embedding_dim = 32;
        CHECK_THROWS_AS(match::finetune(base, pairs, other), InvalidInput);
    }

    SECTION("empty pair set throws") {
        MatedPairSet none{"none", {}};
        CHECK_THROWS_AS(match::finetune(base, none, cfg), DatasetEmpty);
    }
}

TEST_CASE("finetuning on mated pairs moves genuine scores up on its train set") {
    auto records = tiny_records(4, 32, 94);
    auto cfg = tiny_cfg(32);
    cfg.epochs = 1;
    auto base = match::pretrain<float>(records, cfg);

    MatedPairSet pairs = make_mated_pairs(records, "tune");
    auto tune_cfg = cfg;
    tune_cfg.epochs = 8;
    tune_cfg.lr = 0.002;
    auto fine = match::finetune(base, pairs, tune_cfg);

    auto mean_genuine = [&](match::Embedder<float>& net) {
        double s = 0;
        for (const auto& p : pairs.pairs)
            s += match::match_score(net.embed(p.rolled), net.embed(p.latent)).value;
        return s / double(pairs.pairs.size());
    };
    double before = mean_genuine(base);
    double after = mean_genuine(fine);
    CHECK(after > before);
}

TEST_CASE("embedder checkpoints round trip through disk") {
    Rng rng(95);
    match::Embedder<float> emb;
    emb.spec = {32, 2, 24};
    emb.build(rng);

    fs::path dir = fs::temp_directory_path() / "slp_match_ckpt_test";
    fs::create_directories(dir);
    std::string path = (dir / "emb.bin").string();
    emb.save(path);

    auto loaded = match::Embedder<float>::load(path);
    CHECK(loaded.spec == emb.spec);

    RidgePatternParams rp;
    rp.size = 32;
    FingerprintImage img = generate_rolled_print(9, "rt", rp);
    CHECK(emb.embed(img).values == loaded.embed(img).values);

    CHECK_THROWS_AS(match::Embedder<float>::load((dir / "nope.bin").string()), IoError);
    fs::remove_all(dir);
}

TEST_CASE("matcher config reads its keys and validates") {
    auto cfg = Config::from_string(
        "[matcher]\n"
        "alignment_weight = 0.018\n"
        "input_size = 32\n"
        "base_channels = 2\n"
        "embedding_dim = 16\n"
        "epochs = 3\n"
        "seed = 12\n");
    auto m = match::MatcherConfig::from_config(cfg);
    CHECK(m.alignment_weight == 0.018);
    CHECK(m.net.input_size == 32);
    CHECK(m.net.embedding_dim == 16);
    CHECK(m.epochs == 3);
    CHECK(m.seed == 12);

    auto bad = Config::from_string("[matcher]\nalignment_weight = -1.0\n");
    CHECK_THROWS_AS(match::MatcherConfig::from_config(bad), InvalidInput);
}
