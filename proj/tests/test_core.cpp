#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "slp/config.hpp"
#include "slp/dataset.hpp"
#include "slp/error.hpp"
#include "slp/image.hpp"
#include "slp/manifest.hpp"
#include "slp/png_io.hpp"
#include "slp/rng.hpp"

using namespace slp;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
    std::string d = (fs::temp_directory_path() / ("slp_test_" + tag)).string();
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("rng is deterministic and well ranged", "[core][rng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        double u = a.uniform();
        REQUIRE(u == b.uniform());
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    Rng c(43);
    REQUIRE(a.uniform() != c.uniform());
}

TEST_CASE("rng normal has sane moments", "[core][rng]") {
    Rng r(7);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        sum += x;
        sq += x * x;
    }
    REQUIRE(std::abs(sum / n) < 0.05);
    REQUIRE(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("derive_seed separates streams", "[core][rng]") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100; ++i) {
        seen.insert(derive_seed(1, i));
        seen.insert(derive_seed(2, i));
    }
    REQUIRE(seen.size() == 200);
    REQUIRE(derive_seed(5, 6, 7) == derive_seed(5, 6, 7));
    REQUIRE(derive_seed(5, 6, 7) != derive_seed(5, 7, 6));
}

TEST_CASE("errors form one catchable hierarchy", "[core][error]") {
    REQUIRE_THROWS_AS(throw IoError("x"), Error);
    REQUIRE_THROWS_AS(throw ConfigError("x"), Error);
    REQUIRE_THROWS_AS(throw ParseError("x"), Error);
    REQUIRE_THROWS_AS(throw InvalidInput("x"), Error);
    REQUIRE_THROWS_AS(throw DatasetEmpty("x"), Error);
    try {
        throw InvalidInput("needle");
    } catch (const Error& e) {
        REQUIRE(std::string(e.what()).find("needle") != std::string::npos);
    }
}

TEST_CASE("image construction and bounds", "[core][image]") {
    FingerprintImage img("a", 4, 3, 500, 7);
    REQUIRE(img.pixels.size() == 12);
    REQUIRE(img.at(0, 0) == 7);
    img.at(3, 2) = 99;
    REQUIRE(img.pixels[11] == 99);
    REQUIRE_THROWS_AS(FingerprintImage("bad", 0, 4), InvalidInput);
}

TEST_CASE("png round trip preserves pixels and ppi", "[core][png]") {
    std::string dir = temp_dir("png");
    FingerprintImage img("p", 9, 5, 500);
    Rng r(3);
    for (auto& p : img.pixels) p = std::uint8_t(r.uniform_int(256));
    write_png(img, dir + "/p.png");
    FingerprintImage back = read_png(dir + "/p.png", "p");
    REQUIRE(back.width == 9);
    REQUIRE(back.height == 5);
    REQUIRE(back.resolution_ppi == 500);
    REQUIRE(back.pixels == img.pixels);
    REQUIRE_THROWS_AS(read_png(dir + "/missing.png"), IoError);
}

TEST_CASE("config parses sections, types, comments", "[core][config]") {
    Config c = Config::from_string(
        "top = 1\n"
        "[gan]\n"
        "lr_g = 0.0003   # comment\n"
        "max_epochs = 200\n"
        "replay_buffer = true\n"
        "name = \"coarse\"\n"
        "tiers = [\"bad\", \"ugly\"]\n");
    REQUIRE(c.get_int("top", 0) == 1);
    REQUIRE(c.get_double("gan.lr_g", 0) == Catch::Approx(0.0003));
    REQUIRE(c.get_int("gan.max_epochs", 0) == 200);
    REQUIRE(c.get_bool("gan.replay_buffer", false));
    REQUIRE(c.get_str("gan.name", "") == "coarse");
    REQUIRE(c.get_strs("gan.tiers") == std::vector<std::string>{"bad", "ugly"});
    REQUIRE(c.get_int("gan.absent", 41) == 41);
    REQUIRE_THROWS_AS(c.get_bool("gan.lr_g", false), ConfigError);
    REQUIRE_THROWS_AS(c.require_str("gan.absent"), ConfigError);
}

TEST_CASE("config rejects malformed input", "[core][config]") {
    REQUIRE_THROWS_AS(Config::from_string("[gan\nx=1\n"), ParseError);
    REQUIRE_THROWS_AS(Config::from_string("just a line\n"), ParseError);
    REQUIRE_THROWS_AS(Config::from_string("= 3\n"), ParseError);
}

TEST_CASE("config overrides and dump are deterministic", "[core][config]") {
    Config c = Config::from_string("[gan]\nlr_g = 0.1\n");
    c.set_override("gan.lr_g=0.5");
    c.set_override("cluster.k=4");
    REQUIRE(c.get_double("gan.lr_g", 0) == 0.5);
    REQUIRE(c.get_int("cluster.k", 0) == 4);
    REQUIRE_THROWS_AS(c.set_override("no_equals"), ConfigError);
    Config c2 = Config::from_string(c.dump());
    REQUIRE(c2.dump() == c.dump());
}

TEST_CASE("manifest round trips through jsonl", "[core][manifest]") {
    SynthesisManifest m;
    for (int i = 0; i < 3; ++i) {
        ManifestEntry e;
        e.synthetic_id = "s" + std::to_string(i);
        e.source_rolled_id = "r" + std::to_string(i);
        e.model_id = "style0";
        e.cluster_index = 0;
        e.seed = 77 + std::uint64_t(i);
        e.aug = {1.5, -2.0, 3.25};
        if (i != 1) e.tier = QualityTier::Bad;
        m.entries.push_back(e);
    }
    std::string dir = temp_dir("manifest");
    write_manifest(m, dir + "/m.jsonl");
    SynthesisManifest back = read_manifest(dir + "/m.jsonl");
    REQUIRE(back == m);
}

TEST_CASE("manifest write refuses duplicate synthetic ids", "[core][manifest]") {
    SynthesisManifest m;
    ManifestEntry e;
    e.synthetic_id = "dup";
    e.source_rolled_id = "r";
    e.model_id = "m";
    m.entries.push_back(e);
    m.entries.push_back(e);
    REQUIRE(m.violations().size() == 1);
    std::string dir = temp_dir("manifest_dup");
    REQUIRE_THROWS_AS(write_manifest(m, dir + "/m.jsonl"), InvalidInput);
}

TEST_CASE("hand-written manifest fixture parses", "[core][manifest]") {
    std::string dir = temp_dir("manifest_fix");
    std::ofstream out(dir + "/fix.jsonl");
    out << R"({"synthetic_id":"s1","source_rolled_id":"r1","model_id":"style2",)"
        << R"("cluster_index":2,"tier":"good","seed":5,)"
        << R"("aug":{"dx":0.0,"dy":0.0,"theta_deg":0.0}})" << "\n";
    out.close();
    SynthesisManifest m = read_manifest(dir + "/fix.jsonl");
    REQUIRE(m.entries.size() == 1);
    REQUIRE(m.entries[0].synthetic_id == "s1");
    REQUIRE(m.entries[0].model_id == "style2");
    REQUIRE(m.entries[0].tier.has_value());
    REQUIRE(*m.entries[0].tier == QualityTier::Good);
    REQUIRE(m.entries[0].seed == 5);
}

TEST_CASE("dataset grouping by filename pattern", "[core][dataset]") {
    std::string dir = temp_dir("dataset");
    FingerprintImage img("x", 8, 8, 500);
    for (const char* name : {"A_roll", "A_lat", "B_roll", "C_roll", "C_lat"})
        write_png(img, dir + "/" + name + ".png");
    auto recs = load_dataset(dir);
    REQUIRE(recs.size() == 3);
    REQUIRE(recs[0].identity == "A");
    REQUIRE(recs[0].impressions.size() == 2);
    REQUIRE(recs[1].identity == "B");
    REQUIRE(recs[1].impressions.size() == 1);
    REQUIRE(recs[2].identity == "C");

    auto recs2 = load_dataset(dir);
    REQUIRE(recs2.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        REQUIRE(recs2[i].identity == recs[i].identity);
        REQUIRE(recs2[i].impressions.size() == recs[i].impressions.size());
    }
}

TEST_CASE("empty dataset directory raises", "[core][dataset]") {
    std::string dir = temp_dir("dataset_empty");
    REQUIRE_THROWS_AS(load_dataset(dir), DatasetEmpty);
    REQUIRE_THROWS_AS(load_dataset(dir + "/nonexistent"), IoError);
}

TEST_CASE("validate_record flags duplicates and resolution", "[core][dataset]") {
    FingerprintImage img("same_id", 8, 8, 1000);
    FingerRecord r{"A", {{img, ImpressionKind::Rolled}, {img, ImpressionKind::Latent}}};
    auto v = validate_record(r, true);
    bool dup = false, res = false;
    for (const auto& s : v) {
        if (s.find("same_id") != std::string::npos && s.find("duplicate") != std::string::npos)
            dup = true;
        if (s.find("500") != std::string::npos) res = true;
    }
    REQUIRE(dup);
    REQUIRE(res);

    FingerprintImage ok("ok", 8, 8, 500);
    FingerRecord good{"B", {{ok, ImpressionKind::Rolled}}};
    REQUIRE(validate_record(good, true).empty());
}

TEST_CASE("domain sets and mated pairs", "[core][dataset]") {
    FingerprintImage roll("A_roll", 8, 8), lat("A_lat", 8, 8), synth("A_synth", 8, 8);
    std::vector<FingerRecord> recs{
        {"A",
         {{roll, ImpressionKind::Rolled},
          {lat, ImpressionKind::Latent},
          {synth, ImpressionKind::SyntheticLatent}}}};
    DomainSet d = to_domain_set(recs, ImpressionKind::Latent, "lat");
    REQUIRE(d.images.size() == 1);
    REQUIRE(d.images[0].id == "A_lat");

    MatedPairSet with_synth = make_mated_pairs(recs, "p", true);
    REQUIRE(with_synth.pairs.size() == 2);
    MatedPairSet real_only = make_mated_pairs(recs, "p", false);
    REQUIRE(real_only.pairs.size() == 1);
    REQUIRE(real_only.pairs[0].identity == "A");
    REQUIRE(real_only.pairs[0].rolled.id == "A_roll");
    REQUIRE(real_only.pairs[0].latent.id == "A_lat");
}
