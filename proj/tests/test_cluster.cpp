#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "slp/cluster/features.hpp"
#include "slp/cluster/kmeans.hpp"
#include "slp/config.hpp"
#include "slp/error.hpp"
#include "slp/imgproc.hpp"
#include "slp/synthfp.hpp"

using namespace slp;
namespace fs = std::filesystem;

namespace {

// Three well-separated planar blobs; k-means must recover the grouping.
std::vector<cluster::FeatureVector> blob_features(int per_blob, std::uint64_t seed) {
    const double cx[3] = {0.0, 20.0, 0.0};
    const double cy[3] = {0.0, 0.0, 20.0};
    Rng rng(seed);
    std::vector<cluster::FeatureVector> out;
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < per_blob; ++i) {
            cluster::FeatureVector f;
            f.source_id = "b" + std::to_string(b) + "_" + std::to_string(i);
            f.values = {cx[b] + rng.normal(0.0, 0.5), cy[b] + rng.normal(0.0, 0.5)};
            out.push_back(std::move(f));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("grid descriptor is deterministic, finite, and 2048 wide") {
    RidgePatternParams rp;
    rp.size = 64;
    FingerprintImage img = generate_rolled_print(77, "f0", rp);

    cluster::GridFeatureExtractor ex;
    CHECK(ex.dim() == 2048);
    std::vector<double> a = ex.extract(img);
    std::vector<double> b = ex.extract(img);
    REQUIRE(int(a.size()) == ex.dim());
    CHECK(a == b);
    for (double v : a) CHECK(std::isfinite(v));

    SECTION("a rotated print maps to a different descriptor") {
        FingerprintImage rot = warp_translate_rotate(img, 0.0, 0.0, 90.0);
        std::vector<double> c = ex.extract(rot);
        CHECK(c != a);
    }

    SECTION("extract_features carries source ids in order") {
        std::vector<FingerprintImage> imgs = {img, warp_translate_rotate(img, 3.0, 0.0, 0.0)};
        imgs[1].id = "f1";
        auto fts = cluster::extract_features(imgs, ex);
        REQUIRE(fts.size() == 2);
        CHECK(fts[0].source_id == "f0");
        CHECK(fts[1].source_id == "f1");
    }
}

TEST_CASE("l2 normalization brings vectors to unit length and skips zeros") {
    std::vector<cluster::FeatureVector> fs(2);
    fs[0].source_id = "a";
    fs[0].values = {3.0, 4.0};
    fs[1].source_id = "z";
    fs[1].values = {0.0, 0.0};
    cluster::l2_normalize(fs);
    CHECK_THAT(fs[0].values[0], Catch::Matchers::WithinAbs(0.6, 1e-12));
    CHECK_THAT(fs[0].values[1], Catch::Matchers::WithinAbs(0.8, 1e-12));
    CHECK(fs[1].values == std::vector<double>{0.0, 0.0});
}

TEST_CASE("k-means with one cluster returns the mean") {
    std::vector<cluster::FeatureVector> fs(4);
    const double xs[4] = {1.0, 3.0, 5.0, 7.0};
    for (int i = 0; i < 4; ++i) {
        fs[std::size_t(i)].source_id = "p" + std::to_string(i);
        fs[std::size_t(i)].values = {xs[i], 2.0 * xs[i]};
    }
    auto a = cluster::kmeans_cluster(fs, 1, 5);
    REQUIRE(a.k == 1);
    REQUIRE(a.centroids.size() == 1);
    CHECK_THAT(a.centroids[0][0], Catch::Matchers::WithinAbs(4.0, 1e-12));
    CHECK_THAT(a.centroids[0][1], Catch::Matchers::WithinAbs(8.0, 1e-12));
    for (int l : a.labels) CHECK(l == 0);

    // Inertia equals the total squared distance to the mean.
    double want = 0.0;
    for (int i = 0; i < 4; ++i)
        want += (xs[i] - 4.0) * (xs[i] - 4.0) + (2.0 * xs[i] - 8.0) * (2.0 * xs[i] - 8.0);
    CHECK_THAT(a.inertia(), Catch::Matchers::WithinAbs(want, 1e-9));
}

TEST_CASE("k-means separates well-spaced blobs exactly") {
    auto fs = blob_features(8, 61);
    auto a = cluster::kmeans_cluster(fs, 3, 9);
    REQUIRE(a.labels.size() == 24);

    // Every blob lands in a single cluster and the clusters differ.
    std::set<int> blob_label[3];
    for (int i = 0; i < 24; ++i) blob_label[i / 8].insert(a.labels[std::size_t(i)]);
    std::set<int> all;
    for (int b = 0; b < 3; ++b) {
        CHECK(blob_label[b].size() == 1);
        all.insert(*blob_label[b].begin());
    }
    CHECK(all.size() == 3);

    SECTION("objective never increases across Lloyd iterations") {
        for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
            CHECK(a.inertia_history[i] <= a.inertia_history[i - 1] + 1e-9);
    }

    SECTION("same seed reproduces the same assignment") {
        auto b = cluster::kmeans_cluster(fs, 3, 9);
        CHECK(b.labels == a.labels);
        CHECK(b.centroids == a.centroids);
    }
}

TEST_CASE("k equal to the point count zeroes the objective") {
    auto fs = blob_features(2, 62);
    auto a = cluster::kmeans_cluster(fs, int(fs.size()), 3);
    CHECK_THAT(a.inertia(), Catch::Matchers::WithinAbs(0.0, 1e-12));
    std::set<int> labels(a.labels.begin(), a.labels.end());
    CHECK(labels.size() == fs.size());  // every point owns its own centroid
}

TEST_CASE("k-means rejects bad inputs") {
    auto fs = blob_features(1, 63);
    CHECK_THROWS_AS(cluster::kmeans_cluster(fs, 0, 1), InvalidInput);
    CHECK_THROWS_AS(cluster::kmeans_cluster(fs, int(fs.size()) + 1, 1), InvalidInput);

    auto mixed = fs;
    mixed[1].values.push_back(1.0);
    CHECK_THROWS_AS(cluster::kmeans_cluster(mixed, 2, 1), InvalidInput);
}

TEST_CASE("partitioning is disjoint and exhaustive") {
    RidgePatternParams rp;
    rp.size = 32;
    DomainSet latents{"latent", ImpressionKind::Latent, make_identities(6, 71, rp, "lat")};

    cluster::GridFeatureExtractor ex;
    auto fts = cluster::extract_features(latents.images, ex);
    auto a = cluster::kmeans_cluster(fts, 2, 13);

    auto parts = cluster::partition_dataset(latents, a);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].name == "latent.cluster0");
    CHECK(parts[0].domain == ImpressionKind::Latent);

    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& p : parts) {
        total += p.images.size();
        for (const auto& img : p.images) CHECK(seen.insert(img.id).second);
    }
    CHECK(total == latents.images.size());

    // Each image sits in the cluster its label names.
    for (std::size_t j = 0; j < parts.size(); ++j)
        for (const auto& img : parts[j].images) CHECK(a.cluster_of(img.id) == int(j));

    SECTION("an image missing from the assignment is an error") {
        DomainSet extra = latents;
        extra.images.push_back(latents.images[0]);
        extra.images.back().id = "stranger";
        CHECK_THROWS_AS(cluster::partition_dataset(extra, a), InvalidInput);
    }
}

TEST_CASE("assignment csv and centroid files round trip") {
    auto fs_pts = blob_features(2, 64);
    auto a = cluster::kmeans_cluster(fs_pts, 2, 17);

    fs::path dir = fs::temp_directory_path() / "slp_cluster_io_test";
    fs::create_directories(dir);

    std::string csv_path = (dir / "assign.csv").string();
    cluster::write_assignment_csv(a, csv_path);
    std::ifstream is(csv_path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "image_id,cluster_index");
    std::string row;
    std::getline(is, row);
    CHECK(row == a.image_ids[0] + "," + std::to_string(a.labels[0]));

    std::string cen_path = (dir / "centroids.bin").string();
    cluster::write_centroids(a, cen_path);
    auto loaded = cluster::read_centroids(cen_path);
    REQUIRE(loaded.size() == a.centroids.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) CHECK(loaded[i] == a.centroids[i]);

    CHECK_THROWS_AS(cluster::read_centroids((dir / "missing.bin").string()), IoError);
    fs::remove_all(dir);
}

TEST_CASE("extractor factory honors the config and names its limits") {
    auto cfg = Config::from_string("[cluster]\nextractor = \"grid8\"\n");
    auto ex = cluster::make_extractor(cfg);
    CHECK(ex->name() == "grid8");

    auto resnet = Config::from_string("[cluster]\nextractor = \"resnet152v2\"\n");
    CHECK_THROWS_AS(cluster::make_extractor(resnet), ConfigError);

    auto typo = Config::from_string("[cluster]\nextractor = \"gridd8\"\n");
    CHECK_THROWS_AS(cluster::make_extractor(typo), ConfigError);
}
