#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "slp/image.hpp"
#include "slp/imgproc.hpp"
#include "slp/rng.hpp"

namespace slp {

// Procedural rolled-print stand-ins: a smooth random orientation field,
// iteratively sharpened by oriented Gabor filtering, masked to an oval.
// One seed = one "identity"; nearby seeds give unrelated ridge flows.

struct RidgePatternParams {
    int size = 64;
    double wavelength = 7.0;   // ridge period in pixels
    double mask_radius = 0.46; // fraction of size
    int gabor_passes = 3;
};

namespace detail {

struct OrientationField {
    int size;
    std::vector<float> theta;  // radians, mod pi

    float at(int x, int y) const { return theta[std::size_t(y) * size + x]; }
};

// Smooth random orientation field built from a handful of low-frequency
// plane waves in (cos 2t, sin 2t) space, which keeps it continuous mod pi.
inline OrientationField make_orientation_field(int size, Rng& rng) {
    struct Wave {
        double kx, ky, phase, amp;
    };
    auto waves = [&](int n) {
        std::vector<Wave> w(n);
        for (auto& ww : w) {
            ww.kx = rng.uniform(-1.6, 1.6);
            ww.ky = rng.uniform(-1.6, 1.6);
            ww.phase = rng.uniform(0.0, 6.283185307179586);
            ww.amp = rng.uniform(0.4, 1.0);
        }
        return w;
    };
    auto field = [&](const std::vector<Wave>& w, double x, double y) {
        double acc = 0.0;
        for (const auto& ww : w)
            acc += ww.amp * std::cos(6.283185307179586 * (ww.kx * x + ww.ky * y) + ww.phase);
        return acc;
    };
    auto wu = waves(3), wv = waves(3);

    OrientationField f{size, std::vector<float>(std::size_t(size) * size)};
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double nx = double(x) / size, ny = double(y) / size;
            double u = field(wu, nx, ny);
            double v = field(wv, nx, ny);
            f.theta[std::size_t(y) * size + x] = float(0.5 * std::atan2(v, u + 1e-9));
        }
    return f;
}

// Oriented Gabor kernels over a fixed bank of directions.
struct GaborBank {
    int radius;
    int n_orient;
    std::vector<float> k;  // [orient][(2r+1)^2]

    static GaborBank make(double wavelength, int n_orient = 16) {
        GaborBank b;
        double sigma = wavelength * 0.5;
        b.radius = std::max(2, int(std::ceil(2.2 * sigma)));
        b.n_orient = n_orient;
        int side = 2 * b.radius + 1;
        b.k.resize(std::size_t(n_orient) * side * side);
        for (int o = 0; o < n_orient; ++o) {
            double th = 3.14159265358979323846 * o / n_orient;
            double c = std::cos(th), s = std::sin(th);
            double sum_abs = 0.0;
            for (int y = -b.radius; y <= b.radius; ++y)
                for (int x = -b.radius; x <= b.radius; ++x) {
                    // x' runs across the ridges, y' along them.
                    double xr = x * c + y * s;
                    double yr = -x * s + y * c;
                    double g = std::exp(-(xr * xr + 0.25 * yr * yr) / (2 * sigma * sigma)) *
                               std::cos(6.283185307179586 * xr / wavelength);
                    b.kernel(o, x, y) = float(g);
                    sum_abs += std::abs(g);
                }
            for (int y = -b.radius; y <= b.radius; ++y)
                for (int x = -b.radius; x <= b.radius; ++x)
                    b.kernel(o, x, y) /= float(sum_abs / side);
        }
        return b;
    }

    float& kernel(int o, int x, int y) {
        int side = 2 * radius + 1;
        return k[(std::size_t(o) * side + (y + radius)) * side + (x + radius)];
    }
    float kernel(int o, int x, int y) const {
        int side = 2 * radius + 1;
        return k[(std::size_t(o) * side + (y + radius)) * side + (x + radius)];
    }
};

inline GrayF gabor_pass(const GrayF& in, const OrientationField& field, const GaborBank& bank) {
    GrayF out(in.width, in.height, 0.f);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double th = field.at(x, y);
            int o = int(std::lround(th / 3.14159265358979323846 * bank.n_orient + bank.n_orient)) %
                    bank.n_orient;
            float acc = 0.f;
            for (int dy = -bank.radius; dy <= bank.radius; ++dy) {
                int yy = std::clamp(y + dy, 0, in.height - 1);
                for (int dx = -bank.radius; dx <= bank.radius; ++dx) {
                    int xx = std::clamp(x + dx, 0, in.width - 1);
                    acc += bank.kernel(o, dx, dy) * in.at(xx, yy);
                }
            }
            out.at(x, y) = acc;
        }
    return out;
}

}  // namespace detail

// Dark ridges on a light background, oval-masked, 500 ppi metadata.
inline FingerprintImage generate_rolled_print(std::uint64_t seed, std::string id,
                                              const RidgePatternParams& p = {}) {
    Rng rng(derive_seed(seed, 0xf1));
    auto field = detail::make_orientation_field(p.size, rng);
    auto bank = detail::GaborBank::make(p.wavelength);

    GrayF img(p.size, p.size);
    for (auto& v : img.v) v = float(rng.uniform(-1.0, 1.0));
    for (int pass = 0; pass < p.gabor_passes; ++pass) {
        img = detail::gabor_pass(img, field, bank);
        // Re-center per pass so the signal neither dies nor blows up.
        float mx = 1e-6f;
        for (auto& v : img.v) mx = std::max(mx, std::abs(v));
        for (auto& v : img.v) v /= mx;
    }

    FingerprintImage out(std::move(id), p.size, p.size, kCanonicalPpi, 255);
    double cx = (p.size - 1) / 2.0, cy = (p.size - 1) / 2.0;
    double rx = p.mask_radius * p.size, ry = p.mask_radius * p.size * 1.08;
    for (int y = 0; y < p.size; ++y)
        for (int x = 0; x < p.size; ++x) {
            double d = std::sqrt(((x - cx) / rx) * ((x - cx) / rx) +
                                 ((y - cy) / ry) * ((y - cy) / ry));
            // Soft oval mask: ridges fade to white toward the boundary.
            double m = std::clamp((1.05 - d) / 0.18, 0.0, 1.0);
            double ridge = 127.0 - 110.0 * img.at(x, y);  // dark ridges
            out.at(x, y) = clamp_u8(float(255.0 * (1.0 - m) + ridge * m));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Latent-style degradations
// ---------------------------------------------------------------------------

struct DegradationParams {
    double blur_sigma = 0.0;
    double occlusion_frac = 0.0;  // fraction of area hidden by blobs
    double noise_sigma = 0.0;
    double fade = 0.0;            // 0 = full contrast, 1 = vanished
    int background_lines = 0;     // clutter strokes

    static DegradationParams good() { return {0.6, 0.02, 6.0, 0.15, 1}; }
    static DegradationParams bad() { return {1.2, 0.10, 14.0, 0.35, 2}; }
    static DegradationParams ugly() { return {2.0, 0.25, 24.0, 0.55, 4}; }
};

inline FingerprintImage apply_degradation(const FingerprintImage& img,
                                          const DegradationParams& d, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xde));
    FingerprintImage out = img;

    if (d.fade > 0.0)
        for (auto& p : out.pixels)
            p = clamp_u8(float(p + (255.0 - p) * d.fade));

    if (d.blur_sigma > 0.0) out = gaussian_blur(out, d.blur_sigma);

    if (d.occlusion_frac > 0.0) {
        double covered = 0.0;
        double total = double(out.width) * out.height;
        while (covered / total < d.occlusion_frac) {
            int bw = int(rng.uniform(0.08, 0.22) * out.width) + 1;
            int bh = int(rng.uniform(0.08, 0.22) * out.height) + 1;
            int bx = int(rng.uniform_int(std::uint64_t(std::max(1, out.width - bw))));
            int by = int(rng.uniform_int(std::uint64_t(std::max(1, out.height - bh))));
            std::uint8_t shade = rng.uniform() < 0.5 ? 255 : std::uint8_t(rng.uniform(30, 120));
            for (int y = by; y < std::min(out.height, by + bh); ++y)
                for (int x = bx; x < std::min(out.width, bx + bw); ++x) out.at(x, y) = shade;
            covered += double(bw) * bh;
        }
    }

    for (int i = 0; i < d.background_lines; ++i) {
        // Straight clutter stroke across the frame.
        double x0 = rng.uniform(0, out.width), y0 = rng.uniform(0, out.height);
        double ang = rng.uniform(0.0, 6.283185307179586);
        double dx = std::cos(ang), dy = std::sin(ang);
        std::uint8_t shade = std::uint8_t(rng.uniform(20, 90));
        for (double t = -out.width * 1.5; t < out.width * 1.5; t += 0.5) {
            int x = int(std::lround(x0 + t * dx));
            int y = int(std::lround(y0 + t * dy));
            if (x >= 0 && y >= 0 && x < out.width && y < out.height) out.at(x, y) = shade;
        }
    }

    if (d.noise_sigma > 0.0)
        out = add_gaussian_noise(out, d.noise_sigma, derive_seed(seed, 0x9023));

    out.resolution_ppi = img.resolution_ppi;
    return out;
}

// Convenience corpus builder: n distinct identities, ids "<prefix>NNNN".
inline std::vector<FingerprintImage> make_identities(int n, std::uint64_t base_seed,
                                                     const RidgePatternParams& p = {},
                                                     const std::string& prefix = "id") {
    std::vector<FingerprintImage> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%04d", prefix.c_str(), i);
        out.push_back(generate_rolled_print(derive_seed(base_seed, std::uint64_t(i)), buf, p));
    }
    return out;
}

}  // namespace slp
