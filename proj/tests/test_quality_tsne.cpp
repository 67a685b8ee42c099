#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "slp/config.hpp"
#include "slp/error.hpp"
#include "slp/eval/quality.hpp"
#include "slp/eval/tsne.hpp"
#include "slp/imgproc.hpp"
#include "slp/rng.hpp"
#include "slp/synthfp.hpp"

using namespace slp;
namespace fs = std::filesystem;

namespace {

FingerprintImage clean_print(std::uint64_t seed, const std::string& id) {
    RidgePatternParams rp;
    rp.size = 64;
    return generate_rolled_print(seed, id, rp);
}

}  // namespace

TEST_CASE("structure proxy anchors: blank scores zero, everything in range") {
    FingerprintImage blank("blank", 64, 64, 500);  // uniform white
    CHECK(eval::quality_proxy(blank) == 0.0);

    FingerprintImage print = clean_print(7, "clean");
    double q = eval::quality_proxy(print);
    CHECK(q > 0.0);
    CHECK(q <= 100.0);

    Rng rng(8);
    FingerprintImage noise("noise", 64, 64, 500);
    for (auto& p : noise.pixels) p = std::uint8_t(rng.uniform_int(256));
    double qn = eval::quality_proxy(noise);
    CHECK(qn >= 0.0);
    CHECK(qn <= 100.0);
}

TEST_CASE("structure proxy decreases under added noise") {
    FingerprintImage print = clean_print(9, "base");
    double q0 = eval::quality_proxy(print);
    double q1 = eval::quality_proxy(add_gaussian_noise(print, 30.0, 5));
    double q2 = eval::quality_proxy(add_gaussian_noise(print, 90.0, 5));
    CHECK(q0 > q1);
    CHECK(q1 > q2);
}

TEST_CASE("quality histogram bins cover all scored images") {
    std::vector<FingerprintImage> imgs;
    for (int i = 0; i < 6; ++i)
        imgs.push_back(clean_print(std::uint64_t(20 + i), "h" + std::to_string(i)));
    imgs.push_back(FingerprintImage("flat", 64, 64, 500));

    auto hist = eval::quality_histogram(imgs);
    CHECK(hist.source == eval::QualitySource::InternalProxy);
    CHECK(hist.failures.empty());
    REQUIRE(hist.scores.size() == imgs.size());
    int total = std::accumulate(hist.bins.begin(), hist.bins.end(), 0);
    CHECK(total == int(imgs.size()));
    CHECK(hist.bins[0] >= 1);  // the flat image lands in [0,5)
    for (const auto& s : hist.scores) {
        CHECK(s.value >= 0.0);
        CHECK(s.value <= 100.0);
        CHECK(s.source == eval::QualitySource::InternalProxy);
    }

    std::string csv = eval::quality_histogram_csv(hist);
    CHECK(csv.rfind("bin_low,bin_high,count\n", 0) == 0);
    CHECK(csv.find("\n95,100,") != std::string::npos);
}

TEST_CASE("external scorer adapter consumes a conforming binary") {
    fs::path dir = fs::temp_directory_path() / "slp_quality_tool_test";
    fs::create_directories(dir);
    fs::path tool = dir / "fake-scorer.sh";
    {
        std::ofstream os(tool);
        os << "#!/bin/sh\necho 57\n";
    }
    fs::permissions(tool, fs::perms::owner_all);

    std::vector<FingerprintImage> imgs = {clean_print(31, "x0"), clean_print(32, "x1")};
    eval::QualityToolConfig cfg;
    cfg.nfiq2_path = tool.string();
    cfg.work_dir = (dir / "work").string();

    auto hist = eval::quality_histogram(imgs, cfg);
    CHECK(hist.source == eval::QualitySource::ExternalNfiq2);
    REQUIRE(hist.scores.size() == 2);
    CHECK(hist.scores[0].value == 57.0);
    CHECK(hist.bins[11] == 2);  // 57 falls in [55,60)

    SECTION("a failing tool is recorded per image, not fatal") {
        fs::path broken = dir / "broken.sh";
        {
            std::ofstream os(broken);
            os << "#!/bin/sh\nexit 3\n";
        }
        fs::permissions(broken, fs::perms::owner_all);
        cfg.nfiq2_path = broken.string();
        auto h = eval::quality_histogram(imgs, cfg);
        CHECK(h.scores.empty());
        CHECK(h.failures.size() == 2);
        CHECK(h.failures[0].image_id == "x0");
    }

    SECTION("out-of-range output is rejected") {
        fs::path wild = dir / "wild.sh";
        {
            std::ofstream os(wild);
            os << "#!/bin/sh\necho 250\n";
        }
        fs::permissions(wild, fs::perms::owner_all);
        cfg.nfiq2_path = wild.string();
        auto h = eval::quality_histogram(imgs, cfg);
        CHECK(h.scores.empty());
        CHECK(h.failures.size() == 2);
    }

    fs::remove_all(dir);
}

TEST_CASE("quality tool config resolves path and falls back to the proxy") {
    auto cfg = Config::from_string("[quality]\nnfiq2_path = \"/opt/nfiq2\"\n");
    auto q = eval::QualityToolConfig::from_config(cfg);
    CHECK(q.nfiq2_path == "/opt/nfiq2");

    unsetenv("NFIQ2_BIN");
    auto none = eval::QualityToolConfig::from_config(Config::from_string(""));
    CHECK(none.nfiq2_path.empty());

    setenv("NFIQ2_BIN", "/env/nfiq2", 1);
    auto env = eval::QualityToolConfig::from_config(Config::from_string(""));
    CHECK(env.nfiq2_path == "/env/nfiq2");
    unsetenv("NFIQ2_BIN");
}

TEST_CASE("planar embedding needs five vectors and keeps its shape") {
    std::vector<std::vector<double>> few(4, std::vector<double>{0.0, 1.0});
    CHECK_THROWS_AS(eval::tsne_embed(few, 1), InvalidInput);

    std::vector<std::vector<double>> ragged(5, std::vector<double>{0.0, 1.0});
    ragged[2].push_back(2.0);
    CHECK_THROWS_AS(eval::tsne_embed(ragged, 1), InvalidInput);

    Rng rng(41);
    std::vector<std::vector<double>> vecs;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> v(6);
        for (auto& x : v) x = rng.normal();
        vecs.push_back(v);
    }
    auto pts = eval::tsne_embed(vecs, 3, 120);
    REQUIRE(pts.size() == 12);
    for (const auto& p : pts) {
        CHECK(std::isfinite(p[0]));
        CHECK(std::isfinite(p[1]));
    }

    SECTION("same seed reproduces the embedding") {
        auto again = eval::tsne_embed(vecs, 3, 120);
        REQUIRE(again.size() == pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(again[i][0] == pts[i][0]);
            CHECK(again[i][1] == pts[i][1]);
        }
    }
}

TEST_CASE("planar embedding separates two distant clusters") {
    Rng rng(42);
    std::vector<std::vector<double>> vecs;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 10; ++i) {
            std::vector<double> v(8);
            for (auto& x : v) x = c * 50.0 + rng.normal(0.0, 0.5);
            vecs.push_back(v);
        }

    auto pts = eval::tsne_embed(vecs, 5, 400);

    // Mean within-cluster planar distance stays below the between-cluster
    // distance; the embedding keeps the gross cluster structure.
    auto dist = [&](std::size_t i, std::size_t j) {
        double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
        return std::sqrt(dx * dx + dy * dy);
    };
    double within = 0, between = 0;
    int nw = 0, nb = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if ((i < 10) == (j < 10)) {
                within += dist(i, j);
                ++nw;
            } else {
                between += dist(i, j);
                ++nb;
            }
        }
    within /= nw;
    between /= nb;
    CHECK(between > 2.0 * within);
}
