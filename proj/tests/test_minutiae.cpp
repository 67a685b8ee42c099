#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "slp/error.hpp"
#include "slp/eval/minutiae.hpp"
#include "slp/manifest.hpp"
#include "slp/synthfp.hpp"

using namespace slp;
using eval::BinaryImage;
using eval::Minutia;

namespace {

BinaryImage blank15() { return BinaryImage(15, 15); }

int count_kind(const std::vector<Minutia>& ms, Minutia::Kind k) {
    int n = 0;
    for (const auto& m : ms)
        if (m.kind == k) ++n;
    return n;
}

bool has_point(const std::vector<Minutia>& ms, int x, int y, Minutia::Kind k) {
    for (const auto& m : ms)
        if (int(m.x) == x && int(m.y) == y && m.kind == k) return true;
    return false;
}

ManifestEntry entry(const std::string& sid, QualityTier tier) {
    ManifestEntry e;
    e.synthetic_id = sid;
    e.source_rolled_id = "src_" + sid;
    e.model_id = "m";
    e.tier = tier;
    return e;
}

}  // namespace

TEST_CASE("crossing-number rule on hand-drawn skeletons") {
    SECTION("horizontal segment: two endings at its tips") {
        BinaryImage s = blank15();
        for (int x = 3; x <= 11; ++x) s.set(x, 7, 1);
        auto ms = eval::classify_skeleton(s);
        REQUIRE(ms.size() == 2);
        CHECK(has_point(ms, 3, 7, Minutia::Kind::Ending));
        CHECK(has_point(ms, 11, 7, Minutia::Kind::Ending));
    }

    SECTION("vertical segment") {
        BinaryImage s = blank15();
        for (int y = 2; y <= 12; ++y) s.set(7, y, 1);
        auto ms = eval::classify_skeleton(s);
        REQUIRE(ms.size() == 2);
        CHECK(has_point(ms, 7, 2, Minutia::Kind::Ending));
        CHECK(has_point(ms, 7, 12, Minutia::Kind::Ending));
    }

    SECTION("diagonal segment") {
        BinaryImage s = blank15();
        for (int i = 3; i <= 11; ++i) s.set(i, i, 1);
        auto ms = eval::classify_skeleton(s);
        REQUIRE(ms.size() == 2);
        CHECK(has_point(ms, 3, 3, Minutia::Kind::Ending));
        CHECK(has_point(ms, 11, 11, Minutia::Kind::Ending));
    }

    SECTION("T junction: one bifurcation, three endings") {
        BinaryImage s = blank15();
        for (int x = 3; x <= 11; ++x) s.set(x, 7, 1);
        for (int y = 8; y <= 11; ++y) s.set(7, y, 1);
        auto ms = eval::classify_skeleton(s);
        CHECK(count_kind(ms, Minutia::Kind::Bifurcation) == 1);
        CHECK(count_kind(ms, Minutia::Kind::Ending) == 3);
        CHECK(has_point(ms, 7, 7, Minutia::Kind::Bifurcation));
        CHECK(has_point(ms, 7, 11, Minutia::Kind::Ending));
    }

    SECTION("four-way crossing is neither ending nor bifurcation") {
        BinaryImage s = blank15();
        for (int x = 3; x <= 11; ++x) s.set(x, 7, 1);
        for (int y = 3; y <= 11; ++y) s.set(7, y, 1);
        auto ms = eval::classify_skeleton(s);
        CHECK(count_kind(ms, Minutia::Kind::Bifurcation) == 0);
        CHECK(count_kind(ms, Minutia::Kind::Ending) == 4);
    }

    SECTION("closed loop has no minutiae") {
        BinaryImage s = blank15();
        s.set(6, 6, 1);
        s.set(7, 6, 1);
        s.set(8, 6, 1);
        s.set(8, 7, 1);
        s.set(8, 8, 1);
        s.set(7, 8, 1);
        s.set(6, 8, 1);
        s.set(6, 7, 1);
        CHECK(eval::classify_skeleton(s).empty());
    }

    SECTION("isolated dot and empty raster yield nothing") {
        BinaryImage s = blank15();
        CHECK(eval::classify_skeleton(s).empty());
        s.set(7, 7, 1);
        CHECK(eval::classify_skeleton(s).empty());
    }

    SECTION("angles are normalized into one turn") {
        BinaryImage s = blank15();
        for (int x = 3; x <= 11; ++x) s.set(x, 7, 1);
        for (const auto& m : eval::classify_skeleton(s)) {
            CHECK(m.angle >= 0.0);
            CHECK(m.angle < 2.0 * 3.14159265358979323846 + 1e-9);
        }
    }
}

TEST_CASE("border filtering and duplicate merging") {
    eval::MinutiaeParams p;
    p.border_px = 4;
    p.merge_px = 3;

    std::vector<Minutia> pts;
    Minutia near_edge;
    near_edge.x = 1;
    near_edge.y = 7;
    Minutia inner;
    inner.x = 7;
    inner.y = 7;
    Minutia dup = inner;
    dup.x = 8;  // within merge radius of `inner`
    Minutia apart;
    apart.x = 7;
    apart.y = 11;
    pts = {near_edge, inner, dup, apart};

    auto kept = eval::filter_minutiae(pts, 16, 16, p);
    REQUIRE(kept.size() == 2);
    CHECK(int(kept[0].y) == 7);
    CHECK(int(kept[0].x) == 7);  // scan order keeps the first of the pair
    CHECK(int(kept[1].y) == 11);

    SECTION("zero border keeps edge points") {
        eval::MinutiaeParams loose;
        loose.border_px = 0;
        loose.merge_px = 1;
        auto all = eval::filter_minutiae(pts, 16, 16, loose);
        CHECK(all.size() == 4);
    }

    SECTION("mask gates points and enforces its own border") {
        BinaryImage mask(16, 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 8; ++x) mask.set(x, y, 1);  // left half foreground

        eval::MinutiaeParams mp;
        mp.border_px = 2;
        mp.merge_px = 1;
        mp.mask = &mask;

        Minutia in_mask;
        in_mask.x = 3;
        in_mask.y = 8;
        Minutia out_of_mask;
        out_of_mask.x = 12;
        out_of_mask.y = 8;
        Minutia hugging_border;
        hugging_border.x = 7;  // foreground, but one step from background
        hugging_border.y = 8;
        auto survivors =
            eval::filter_minutiae({in_mask, out_of_mask, hugging_border}, 16, 16, mp);
        REQUIRE(survivors.size() == 1);
        CHECK(int(survivors[0].x) == 3);
    }

    SECTION("mask shape mismatch throws") {
        BinaryImage mask(8, 8);
        eval::MinutiaeParams mp;
        mp.mask = &mask;
        CHECK_THROWS_AS(eval::filter_minutiae(pts, 16, 16, mp), InvalidInput);
    }
}

TEST_CASE("binarization and thinning reduce a thick bar to its spine") {
    // Dark 5px-tall bar on white; adaptive threshold marks it, thinning
    // leaves a 1px line whose classify pass finds exactly the two tips.
    FingerprintImage img("bar", 40, 40, 500, 255);
    for (int y = 17; y <= 21; ++y)
        for (int x = 6; x <= 33; ++x) img.at(x, y) = 20;

    BinaryImage bin = eval::binarize_adaptive(img, 15, 10);
    int on = 0;
    for (auto v : bin.v) on += v;
    CHECK(on >= 5 * 28);  // the whole bar binarizes as ridge

    BinaryImage skel = eval::thin_zhang_suen(bin);
    int skel_on = 0;
    for (auto v : skel.v) skel_on += v;
    CHECK(skel_on < on);
    CHECK(skel_on >= 20);

    auto ms = eval::classify_skeleton(skel);
    CHECK(count_kind(ms, Minutia::Kind::Ending) == 2);
    CHECK(count_kind(ms, Minutia::Kind::Bifurcation) == 0);
}

TEST_CASE("full extraction contract: blank input gives an empty set") {
    FingerprintImage blank("blank", 64, 64, 500, 255);
    auto set = eval::extract_minutiae(blank);
    CHECK(set.source_id == "blank");
    CHECK(set.points.empty());
}

TEST_CASE("full extraction on a synthetic print is deterministic and in bounds") {
    RidgePatternParams rp;
    rp.size = 64;
    FingerprintImage img = generate_rolled_print(201, "m0", rp);

    auto a = eval::extract_minutiae(img);
    auto b = eval::extract_minutiae(img);
    REQUIRE(!a.points.empty());
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.points[i].y == b.points[i].y);
        CHECK(a.points[i].kind == b.points[i].kind);
        CHECK(a.points[i].x >= 0);
        CHECK(a.points[i].x < img.width);
        CHECK(a.points[i].y >= 0);
        CHECK(a.points[i].y < img.height);
    }
}

TEST_CASE("tier statistics aggregate counts and check the quality ordering") {
    SynthesisManifest man;
    man.entries = {entry("s0", QualityTier::Good), entry("s1", QualityTier::Good),
                   entry("s2", QualityTier::Bad),  entry("s3", QualityTier::Bad),
                   entry("s4", QualityTier::Ugly), entry("s5", QualityTier::Ugly)};
    std::map<std::string, int> counts = {{"s0", 10}, {"s1", 10}, {"s2", 6},
                                         {"s3", 6},  {"s4", 4},  {"s5", 4}};

    auto stats = eval::minutiae_tier_stats(man, counts);
    REQUIRE(stats.rows.size() == 3);
    CHECK(stats.rows[QualityTier::Good].count == 2);
    CHECK_THAT(stats.rows[QualityTier::Good].mean, Catch::Matchers::WithinAbs(10.0, 1e-12));
    CHECK_THAT(stats.rows[QualityTier::Bad].mean, Catch::Matchers::WithinAbs(6.0, 1e-12));
    CHECK_THAT(stats.rows[QualityTier::Ugly].mean, Catch::Matchers::WithinAbs(4.0, 1e-12));
    CHECK(stats.rows[QualityTier::Good].stddev == 0.0);
    CHECK(stats.monotone());

    SECTION("a quality inversion flips the flags") {
        counts["s0"] = 1;
        counts["s1"] = 1;  // Good mean drops below Bad
        auto inverted = eval::minutiae_tier_stats(man, counts);
        CHECK_FALSE(inverted.good_ge_bad);
        CHECK_FALSE(inverted.monotone());
    }

    SECTION("spread within a tier shows up as stddev") {
        counts["s2"] = 2;
        counts["s3"] = 10;  // mean 6, stddev 4
        auto spread = eval::minutiae_tier_stats(man, counts);
        CHECK_THAT(spread.rows[QualityTier::Bad].stddev,
                   Catch::Matchers::WithinAbs(4.0, 1e-12));
    }

    SECTION("an untiered entry is an error") {
        man.entries[0].tier.reset();
        CHECK_THROWS_AS(eval::minutiae_tier_stats(man, counts), InvalidInput);
    }

    SECTION("a missing count is an error") {
        counts.erase("s3");
        CHECK_THROWS_AS(eval::minutiae_tier_stats(man, counts), InvalidInput);
    }
}

TEST_CASE("tier statistics can extract counts from images directly") {
    RidgePatternParams rp;
    rp.size = 64;
    FingerprintImage img0 = generate_rolled_print(301, "t0", rp);
    FingerprintImage img1 = generate_rolled_print(302, "t1", rp);

    SynthesisManifest man;
    man.entries = {entry("t0", QualityTier::Good), entry("t1", QualityTier::Bad)};

    std::vector<FingerprintImage> imgs = {img0, img1};
    auto stats = eval::minutiae_tier_stats(man, imgs);
    REQUIRE(stats.rows.count(QualityTier::Good) == 1);
    REQUIRE(stats.rows.count(QualityTier::Bad) == 1);
    CHECK(stats.rows[QualityTier::Good].mean ==
          double(eval::extract_minutiae(img0).points.size()));
    CHECK(stats.rows[QualityTier::Bad].mean ==
          double(eval::extract_minutiae(img1).points.size()));
}
