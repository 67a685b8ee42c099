#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "slp/error.hpp"
#include "slp/image.hpp"
#include "slp/manifest.hpp"

namespace slp::eval {

struct Minutia {
    enum class Kind { Ending, Bifurcation };
    double x = 0, y = 0;
    double angle = 0;  // [0, 2pi)
    Kind kind = Kind::Ending;
};

struct MinutiaSet {
    std::string source_id;
    std::vector<Minutia> points;
};

// Binary raster: 1 = ridge. Plain row-major byte grid.
struct BinaryImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> v;

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), v(std::size_t(w) * h, 0) {}
    std::uint8_t at(int x, int y) const {
        if (x < 0 || y < 0 || x >= width || y >= height) return 0;
        return v[std::size_t(y) * width + x];
    }
    void set(int x, int y, std::uint8_t val) { v[std::size_t(y) * width + x] = val; }
};

struct MinutiaeParams {
    int binarize_window = 15;   // local-mean window (odd)
    int binarize_offset = 10;   // ridge if pixel < mean - offset
    int border_px = 10;         // drop minutiae this close to the mask border
    int merge_px = 8;           // collapse pairs closer than this
    const BinaryImage* mask = nullptr;  // null: whole image is foreground
};

// Ridge = locally dark. Local mean over a clamped window via integral image.
inline BinaryImage binarize_adaptive(const FingerprintImage& img, int window = 15,
                                     int offset = 10) {
    const int w = img.width, h = img.height, r = window / 2;
    std::vector<double> integral(std::size_t(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            integral[std::size_t(y + 1) * (w + 1) + x + 1] =
                double(img.at(x, y)) + integral[std::size_t(y) * (w + 1) + x + 1] +
                integral[std::size_t(y + 1) * (w + 1) + x] -
                integral[std::size_t(y) * (w + 1) + x];
    BinaryImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
            double area = double(x1 - x0 + 1) * (y1 - y0 + 1);
            double sum = integral[std::size_t(y1 + 1) * (w + 1) + x1 + 1] -
                         integral[std::size_t(y0) * (w + 1) + x1 + 1] -
                         integral[std::size_t(y1 + 1) * (w + 1) + x0] +
                         integral[std::size_t(y0) * (w + 1) + x0];
            double mean = sum / area;
            if (double(img.at(x, y)) < mean - offset) out.set(x, y, 1);
        }
    }
    return out;
}

// Zhang-Suen thinning to a 1-px skeleton.
inline BinaryImage thin_zhang_suen(BinaryImage img) {
    auto neighbors = [&](int x, int y, std::uint8_t p[8]) {
        p[0] = img.at(x, y - 1);
        p[1] = img.at(x + 1, y - 1);
        p[2] = img.at(x + 1, y);
        p[3] = img.at(x + 1, y + 1);
        p[4] = img.at(x, y + 1);
        p[5] = img.at(x - 1, y + 1);
        p[6] = img.at(x - 1, y);
        p[7] = img.at(x - 1, y - 1);
    };
    bool changed = true;
    std::vector<std::pair<int, int>> kill;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            kill.clear();
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    if (!img.at(x, y)) continue;
                    std::uint8_t p[8];
                    neighbors(x, y, p);
                    int b = 0;
                    for (int i = 0; i < 8; ++i) b += p[i];
                    if (b < 2 || b > 6) continue;
                    int a = 0;
                    for (int i = 0; i < 8; ++i)
                        if (!p[i] && p[(i + 1) % 8]) ++a;
                    if (a != 1) continue;
                    if (pass == 0) {
                        if (p[0] && p[2] && p[4]) continue;
                        if (p[2] && p[4] && p[6]) continue;
                    } else {
                        if (p[0] && p[2] && p[6]) continue;
                        if (p[0] && p[4] && p[6]) continue;
                    }
                    kill.emplace_back(x, y);
                }
            }
            for (auto [x, y] : kill) img.set(x, y, 0);
            if (!kill.empty()) changed = true;
        }
    }
    return img;
}

// Crossing-number rule on a 1-px skeleton: CN 1 = ridge ending, CN 3 =
// bifurcation. Exposed separately so hand-drawn skeleton fixtures can be
// checked without binarization/thinning in the loop.
inline std::vector<Minutia> classify_skeleton(const BinaryImage& skel) {
    std::vector<Minutia> out;
    for (int y = 0; y < skel.height; ++y) {
        for (int x = 0; x < skel.width; ++x) {
            if (!skel.at(x, y)) continue;
            std::uint8_t p[8] = {skel.at(x, y - 1),     skel.at(x + 1, y - 1),
                                 skel.at(x + 1, y),     skel.at(x + 1, y + 1),
                                 skel.at(x, y + 1),     skel.at(x - 1, y + 1),
                                 skel.at(x - 1, y),     skel.at(x - 1, y - 1)};
            int cn = 0;
            for (int i = 0; i < 8; ++i) cn += std::abs(int(p[i]) - int(p[(i + 1) % 8]));
            cn /= 2;
            if (cn != 1 && cn != 3) continue;
            Minutia m;
            m.x = x;
            m.y = y;
            m.kind = (cn == 1) ? Minutia::Kind::Ending : Minutia::Kind::Bifurcation;
            // Direction toward the local ridge mass.
            double sx = 0, sy = 0;
            int cnt = 0;
            for (int dy = -5; dy <= 5; ++dy)
                for (int dx = -5; dx <= 5; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (skel.at(x + dx, y + dy)) {
                        sx += dx;
                        sy += dy;
                        ++cnt;
                    }
                }
            double ang = cnt ? std::atan2(sy, sx) : 0.0;
            if (ang < 0) ang += 2.0 * 3.14159265358979323846;
            m.angle = ang;
            out.push_back(m);
        }
    }
    return out;
}

namespace detail {

// Distance (in chebyshev-ish BFS steps) from each pixel to the nearest
// background pixel of the mask; used for the border filter.
inline std::vector<int> mask_border_distance(const BinaryImage& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<int> dist(std::size_t(w) * h, -1);
    std::deque<std::pair<int, int>> q;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!mask.at(x, y)) {
                dist[std::size_t(y) * w + x] = 0;
                q.emplace_back(x, y);
            }
    if (q.empty()) return dist;  // all-foreground mask: stays -1 (infinite)
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        int d = dist[std::size_t(y) * w + x];
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                auto& cell = dist[std::size_t(ny) * w + nx];
                if (cell < 0) {
                    cell = d + 1;
                    q.emplace_back(nx, ny);
                }
            }
    }
    return dist;
}

}  // namespace detail

// Border filter + near-duplicate merge; deterministic scan order (y, then x).
inline std::vector<Minutia> filter_minutiae(std::vector<Minutia> points, int width, int height,
                                            const MinutiaeParams& params) {
    std::vector<Minutia> kept;
    std::vector<int> dist;
    if (params.mask) {
        if (params.mask->width != width || params.mask->height != height)
            throw InvalidInput("minutiae mask shape does not match image");
        dist = detail::mask_border_distance(*params.mask);
    }
    for (const auto& m : points) {
        int x = int(m.x), y = int(m.y);
        if (params.mask) {
            if (!params.mask->at(x, y)) continue;
            int d = dist[std::size_t(y) * width + x];
            if (d >= 0 && d < params.border_px) continue;
        } else {
            int edge = std::min(std::min(x, y), std::min(width - 1 - x, height - 1 - y));
            if (edge < params.border_px) continue;
        }
        kept.push_back(m);
    }
    std::sort(kept.begin(), kept.end(), [](const Minutia& a, const Minutia& b) {
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        return int(a.kind) < int(b.kind);
    });
    std::vector<Minutia> merged;
    for (const auto& m : kept) {
        bool close = false;
        for (const auto& k : merged) {
            double dx = m.x - k.x, dy = m.y - k.y;
            if (dx * dx + dy * dy < double(params.merge_px) * params.merge_px) {
                close = true;
                break;
            }
        }
        if (!close) merged.push_back(m);
    }
    return merged;
}

inline MinutiaSet extract_minutiae(const FingerprintImage& img,
                                   const MinutiaeParams& params = {}) {
    MinutiaSet out;
    out.source_id = img.id;
    BinaryImage bin = binarize_adaptive(img, params.binarize_window, params.binarize_offset);
    bool any = false;
    for (auto v : bin.v)
        if (v) {
            any = true;
            break;
        }
    if (!any) return out;  // blank input: empty set by contract
    BinaryImage skel = thin_zhang_suen(std::move(bin));
    out.points = filter_minutiae(classify_skeleton(skel), img.width, img.height, params);
    return out;
}

struct TierRow {
    int count = 0;
    double mean = 0;
    double stddev = 0;
};

struct TierStats {
    std::map<QualityTier, TierRow> rows;
    bool good_ge_bad = true;
    bool bad_ge_ugly = true;

    bool monotone() const { return good_ge_bad && bad_ge_ugly; }
};

// Per-tier minutiae-count statistics from precomputed counts keyed by
// synthetic id. Every manifest entry must have an assigned tier.
inline TierStats minutiae_tier_stats(const SynthesisManifest& manifest,
                                     const std::map<std::string, int>& counts) {
    std::map<QualityTier, std::vector<double>> groups;
    for (const auto& e : manifest.entries) {
        if (!e.tier)
            throw InvalidInput("minutiae_tier_stats: entry " + e.synthetic_id +
                               " has no assigned tier");
        auto it = counts.find(e.synthetic_id);
        if (it == counts.end())
            throw InvalidInput("minutiae_tier_stats: no minutiae count for " + e.synthetic_id);
        groups[*e.tier].push_back(double(it->second));
    }
    TierStats out;
    for (auto& [tier, xs] : groups) {
        TierRow row;
        row.count = int(xs.size());
        double s = 0;
        for (double v : xs) s += v;
        row.mean = s / double(xs.size());
        double var = 0;
        for (double v : xs) var += (v - row.mean) * (v - row.mean);
        row.stddev = std::sqrt(var / double(xs.size()));
        out.rows[tier] = row;
    }
    auto mean_of = [&](QualityTier t, double fallback) {
        auto it = out.rows.find(t);
        return it == out.rows.end() ? fallback : it->second.mean;
    };
    if (out.rows.count(QualityTier::Good) && out.rows.count(QualityTier::Bad))
        out.good_ge_bad = mean_of(QualityTier::Good, 0) >= mean_of(QualityTier::Bad, 0);
    if (out.rows.count(QualityTier::Bad) && out.rows.count(QualityTier::Ugly))
        out.bad_ge_ugly = mean_of(QualityTier::Bad, 0) >= mean_of(QualityTier::Ugly, 0);
    return out;
}

inline TierStats minutiae_tier_stats(const SynthesisManifest& manifest,
                                     const std::vector<FingerprintImage>& images,
                                     const MinutiaeParams& params = {}) {
    std::map<std::string, int> counts;
    for (const auto& img : images)
        counts[img.id] = int(extract_minutiae(img, params).points.size());
    return minutiae_tier_stats(manifest, counts);
}

}  // namespace slp::eval
