#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "slp/image.hpp"
#include "slp/rng.hpp"

namespace slp {

// ---------------------------------------------------------------------------
// Resampling primitives
// ---------------------------------------------------------------------------

// Bilinear sample with a constant fill outside the image.
inline float sample_bilinear(const FingerprintImage& img, float x, float y, float fill) {
    if (x < -0.5f || y < -0.5f || x > img.width - 0.5f || y > img.height - 0.5f) return fill;
    int x0 = int(std::floor(x));
    int y0 = int(std::floor(y));
    float fx = x - x0;
    float fy = y - y0;
    auto px = [&](int xx, int yy) -> float {
        if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) return fill;
        return float(img.at(xx, yy));
    };
    float top = px(x0, y0) * (1.f - fx) + px(x0 + 1, y0) * fx;
    float bot = px(x0, y0 + 1) * (1.f - fx) + px(x0 + 1, y0 + 1) * fx;
    return top * (1.f - fy) + bot * fy;
}

// Pixel-center aligned bilinear resize. Exact copy when the shape is unchanged.
inline FingerprintImage resize_bilinear(const FingerprintImage& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw InvalidInput("resize: degenerate target size");
    if (out_w == img.width && out_h == img.height) return img;
    FingerprintImage out(img.id, out_w, out_h, img.resolution_ppi);
    float sx = float(img.width) / float(out_w);
    float sy = float(img.height) / float(out_h);
    for (int y = 0; y < out_h; ++y) {
        float src_y = (y + 0.5f) * sy - 0.5f;
        for (int x = 0; x < out_w; ++x) {
            float src_x = (x + 0.5f) * sx - 0.5f;
            out.at(x, y) = clamp_u8(sample_bilinear(img, src_x, src_y, 255.f));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonicalization: 500 ppi, square target size, white padding
// ---------------------------------------------------------------------------

// Rescales to 500 ppi, fits into target_size x target_size preserving aspect
// ratio, and centers on a white background. Idempotent on canonical input.
inline FingerprintImage to_canonical(const FingerprintImage& img, int target_size) {
    if (img.width <= 0 || img.height <= 0 || target_size <= 0)
        throw InvalidInput("to_canonical: degenerate image or target");
    int ppi = img.resolution_ppi > 0 ? img.resolution_ppi : kCanonicalPpi;
    double ppi_scale = double(kCanonicalPpi) / double(ppi);
    double w_at_500 = img.width * ppi_scale;
    double h_at_500 = img.height * ppi_scale;
    double fit = std::min(double(target_size) / w_at_500, double(target_size) / h_at_500);
    double s = ppi_scale * fit;
    auto dim = [&](int v) {
        int d = int(std::ceil(v * s - 1e-9));
        return std::clamp(d, 1, target_size);
    };
    int out_w = dim(img.width);
    int out_h = dim(img.height);

    FingerprintImage scaled = resize_bilinear(img, out_w, out_h);
    FingerprintImage out(img.id, target_size, target_size, kCanonicalPpi, 255);
    int off_x = (target_size - out_w) / 2;
    int off_y = (target_size - out_h) / 2;
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) out.at(off_x + x, off_y + y) = scaled.at(x, y);
    return out;
}

// ---------------------------------------------------------------------------
// CLAHE
// ---------------------------------------------------------------------------

namespace detail {

// Clipped-histogram equalization mapping for one tile.
inline void clahe_tile_mapping(const std::vector<int>& hist, int area, double clip_limit,
                               std::uint8_t out_map[256]) {
    int clip = std::max(1, int(clip_limit * area / 256.0));
    int excess = 0;
    int clipped[256];
    for (int i = 0; i < 256; ++i) {
        clipped[i] = hist[i];
        if (clipped[i] > clip) {
            excess += clipped[i] - clip;
            clipped[i] = clip;
        }
    }
    int share = excess / 256;
    int rest = excess % 256;
    for (int i = 0; i < 256; ++i) clipped[i] += share;
    for (int i = 0; i < rest; ++i) clipped[i] += 1;

    double scale = 255.0 / double(area);
    long cdf = 0;
    for (int i = 0; i < 256; ++i) {
        cdf += clipped[i];
        out_map[i] = std::uint8_t(std::lround(std::min(255.0, cdf * scale)));
    }
}

}  // namespace detail

// Contrast-limited adaptive histogram equalization over a tiles x tiles grid,
// with bilinear blending between neighbouring tile mappings.
inline FingerprintImage clahe(const FingerprintImage& img, double clip_limit = 2.0,
                              int tiles = 8) {
    if (clip_limit <= 0.0) throw InvalidInput("clahe: clip_limit must be > 0");
    if (tiles < 1) throw InvalidInput("clahe: tiles must be >= 1");
    tiles = std::min({tiles, img.width, img.height});

    int tw = (img.width + tiles - 1) / tiles;
    int th = (img.height + tiles - 1) / tiles;

    // Per-tile histograms over the actual tile extents (edge tiles may be
    // smaller), then per-tile equalization mappings.
    std::vector<std::uint8_t> maps(std::size_t(tiles) * tiles * 256);
    for (int ty = 0; ty < tiles; ++ty) {
        for (int tx = 0; tx < tiles; ++tx) {
            int x0 = tx * tw, x1 = std::min(img.width, x0 + tw);
            int y0 = ty * th, y1 = std::min(img.height, y0 + th);
            std::vector<int> hist(256, 0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) ++hist[img.at(x, y)];
            int area = std::max(1, (x1 - x0) * (y1 - y0));
            detail::clahe_tile_mapping(hist, area, clip_limit,
                                       &maps[(std::size_t(ty) * tiles + tx) * 256]);
        }
    }

    auto map_at = [&](int tx, int ty, std::uint8_t v) -> double {
        tx = std::clamp(tx, 0, tiles - 1);
        ty = std::clamp(ty, 0, tiles - 1);
        return double(maps[(std::size_t(ty) * tiles + tx) * 256 + v]);
    };

    FingerprintImage out(img.id, img.width, img.height, img.resolution_ppi);
    for (int y = 0; y < img.height; ++y) {
        double gy = (y - th / 2.0) / th;
        int ty0 = int(std::floor(gy));
        double fy = gy - ty0;
        for (int x = 0; x < img.width; ++x) {
            double gx = (x - tw / 2.0) / tw;
            int tx0 = int(std::floor(gx));
            double fx = gx - tx0;
            std::uint8_t v = img.at(x, y);
            double top = map_at(tx0, ty0, v) * (1 - fx) + map_at(tx0 + 1, ty0, v) * fx;
            double bot = map_at(tx0, ty0 + 1, v) * (1 - fx) + map_at(tx0 + 1, ty0 + 1, v) * fx;
            out.at(x, y) = clamp_u8(float(top * (1 - fy) + bot * fy));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training augmentation: random translation + rotation, white fill
// ---------------------------------------------------------------------------

struct AugmentConfig {
    double max_translate_px = 100.0;  // at native capture scale
    double max_rotate_deg = 15.0;
    int native_size = 512;  // reference edge length the translation bound refers to
};

// Deterministic core: rotate by theta about the center, then translate.
// Identity when all parameters are zero.
inline FingerprintImage warp_translate_rotate(const FingerprintImage& img, double dx, double dy,
                                              double theta_deg, std::uint8_t fill = 255) {
    if (dx == 0.0 && dy == 0.0 && theta_deg == 0.0) return img;
    double th = theta_deg * 3.14159265358979323846 / 180.0;
    double c = std::cos(th), s = std::sin(th);
    double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    FingerprintImage out(img.id, img.width, img.height, img.resolution_ppi, fill);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // Inverse map: undo translation, then rotation.
            double ux = x - dx - cx;
            double uy = y - dy - cy;
            double sx = c * ux + s * uy + cx;
            double sy = -s * ux + c * uy + cy;
            out.at(x, y) = clamp_u8(sample_bilinear(img, float(sx), float(sy), float(fill)));
        }
    }
    return out;
}

struct DrawnAugment {
    double dx = 0.0;
    double dy = 0.0;
    double theta_deg = 0.0;
};

// The translation bound is given in native-scale pixels; rescale it so a
// downsized training image is displaced by the same physical fraction.
inline DrawnAugment draw_augment(const AugmentConfig& cfg, int image_size, std::uint64_t seed) {
    Rng rng(seed);
    double t = cfg.max_translate_px * double(image_size) / double(std::max(1, cfg.native_size));
    DrawnAugment a;
    a.dx = rng.uniform(-t, t);
    a.dy = rng.uniform(-t, t);
    a.theta_deg = rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg);
    return a;
}

inline FingerprintImage augment(const FingerprintImage& img, std::uint64_t seed,
                                const AugmentConfig& cfg = {}) {
    DrawnAugment a = draw_augment(cfg, std::max(img.width, img.height), seed);
    return warp_translate_rotate(img, a.dx, a.dy, a.theta_deg);
}

// ---------------------------------------------------------------------------
// Shared filtering helpers (used by the procedural generator and evaluation)
// ---------------------------------------------------------------------------

inline FingerprintImage gaussian_blur(const FingerprintImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    float sum = 0.f;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = float(std::exp(-0.5 * (i * i) / (sigma * sigma)));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;

    GrayF tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.f;
            for (int i = -radius; i <= radius; ++i) {
                int xx = std::clamp(x + i, 0, img.width - 1);
                acc += k[i + radius] * float(img.at(xx, y));
            }
            tmp.at(x, y) = acc;
        }
    FingerprintImage out(img.id, img.width, img.height, img.resolution_ppi);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.f;
            for (int i = -radius; i <= radius; ++i) {
                int yy = std::clamp(y + i, 0, img.height - 1);
                acc += k[i + radius] * tmp.at(x, yy);
            }
            out.at(x, y) = clamp_u8(acc);
        }
    return out;
}

inline FingerprintImage add_gaussian_noise(const FingerprintImage& img, double sigma,
                                           std::uint64_t seed) {
    Rng rng(seed);
    FingerprintImage out = img;
    for (auto& p : out.pixels) p = clamp_u8(float(p + sigma * rng.normal()));
    return out;
}

}  // namespace slp
