#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slp/error.hpp"

namespace slp {

inline constexpr int kCanonicalPpi = 500;

// 8-bit grayscale raster with capture-resolution metadata. Value object:
// cheap to copy at desk scale, safe to share across threads once built.
struct FingerprintImage {
    std::string id;
    int width = 0;
    int height = 0;
    int resolution_ppi = kCanonicalPpi;
    std::vector<std::uint8_t> pixels;  // row-major, height*width

    FingerprintImage() = default;
    FingerprintImage(std::string id_, int w, int h, int ppi = kCanonicalPpi,
                     std::uint8_t fill = 255)
        : id(std::move(id_)), width(w), height(h), resolution_ppi(ppi) {
        if (w <= 0 || h <= 0) throw InvalidInput("image '" + id + "': degenerate size");
        pixels.assign(std::size_t(w) * std::size_t(h), fill);
    }

    std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }

    bool same_shape(const FingerprintImage& o) const {
        return width == o.width && height == o.height;
    }

    bool is_canonical(int target_size) const {
        return resolution_ppi == kCanonicalPpi && width == target_size && height == target_size;
    }
};

inline bool operator==(const FingerprintImage& a, const FingerprintImage& b) {
    return a.id == b.id && a.width == b.width && a.height == b.height &&
           a.resolution_ppi == b.resolution_ppi && a.pixels == b.pixels;
}

// Float plane used by the numeric kernels; values are whatever the caller
// puts in (no implicit [0,255] contract).
struct GrayF {
    int width = 0;
    int height = 0;
    std::vector<float> v;

    GrayF() = default;
    GrayF(int w, int h, float fill = 0.f) : width(w), height(h), v(std::size_t(w) * h, fill) {}

    float& at(int x, int y) { return v[std::size_t(y) * width + x]; }
    float at(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

inline GrayF to_float(const FingerprintImage& img, float scale = 1.f / 255.f) {
    GrayF out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out.v[i] = float(img.pixels[i]) * scale;
    return out;
}

inline std::uint8_t clamp_u8(float x) {
    if (x <= 0.f) return 0;
    if (x >= 255.f) return 255;
    return std::uint8_t(x + 0.5f);
}

inline FingerprintImage from_float(const GrayF& g, std::string id, int ppi = kCanonicalPpi,
                                   float scale = 255.f) {
    FingerprintImage out(std::move(id), g.width, g.height, ppi);
    for (std::size_t i = 0; i < g.v.size(); ++i) out.pixels[i] = clamp_u8(g.v[i] * scale);
    return out;
}

}  // namespace slp
