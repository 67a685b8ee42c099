#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "slp/config.hpp"
#include "slp/error.hpp"
#include "slp/image.hpp"
#include "slp/imgproc.hpp"

namespace slp::cluster {

struct FeatureVector {
    std::string source_id;
    std::vector<double> values;
};

// Injected dependency: anything that maps an image to a fixed-length
// descriptor. The reference configuration expects a pretrained 2048-dim
// backbone; the builtin extractor below is the self-contained default.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual int input_size() const = 0;
    virtual std::vector<double> extract(const FingerprintImage& img) const = 0;
};

// Handcrafted 2048-dim descriptor: 16x16 grid over a 128px resize, 8 values
// per block (intensity mean/spread, gradient energy, 4-bin orientation
// histogram, orientation coherence). Deterministic and training-free, which
// keeps clustering reproducible without shipping backbone weights.
class GridFeatureExtractor : public FeatureExtractor {
public:
    std::string name() const override { return "grid8"; }
    int dim() const override { return 2048; }
    int input_size() const override { return 128; }

    std::vector<double> extract(const FingerprintImage& img) const override {
        const int S = input_size();
        FingerprintImage r = (img.width == S && img.height == S)
                                 ? img
                                 : resize_bilinear(img, S, S);
        const int grid = 16, block = S / grid;
        std::vector<double> out;
        out.reserve(2048);
        for (int by = 0; by < grid; ++by) {
            for (int bx = 0; bx < grid; ++bx) {
                double sum = 0, sum2 = 0, grad_e = 0;
                double hist[4] = {0, 0, 0, 0};
                double gxx = 0, gyy = 0, gxy = 0;
                for (int y = by * block; y < (by + 1) * block; ++y) {
                    for (int x = bx * block; x < (bx + 1) * block; ++x) {
                        double v = r.at(x, y) / 255.0;
                        sum += v;
                        sum2 += v * v;
                        int xm = std::max(x - 1, 0), xp = std::min(x + 1, S - 1);
                        int ym = std::max(y - 1, 0), yp = std::min(y + 1, S - 1);
                        double gx = (r.at(xp, y) - r.at(xm, y)) / 255.0;
                        double gy = (r.at(x, yp) - r.at(x, ym)) / 255.0;
                        double mag = std::sqrt(gx * gx + gy * gy);
                        grad_e += mag;
                        double ang = std::atan2(gy, gx);  // [-pi, pi]
                        if (ang < 0) ang += 3.14159265358979323846;  // fold to [0, pi)
                        int bin = std::min(3, int(ang / (3.14159265358979323846 / 4.0)));
                        hist[bin] += mag;
                        gxx += gx * gx;
                        gyy += gy * gy;
                        gxy += gx * gy;
                    }
                }
                const double n = double(block) * block;
                double mean = sum / n;
                double var = std::max(0.0, sum2 / n - mean * mean);
                double hist_total = hist[0] + hist[1] + hist[2] + hist[3] + 1e-12;
                double coh = std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy) /
                             (gxx + gyy + 1e-12);
                out.push_back(mean);
                out.push_back(std::sqrt(var));
                out.push_back(grad_e / n);
                for (double h : hist) out.push_back(h / hist_total);
                out.push_back(coh);
            }
        }
        return out;
    }
};

inline std::unique_ptr<FeatureExtractor> make_extractor(const Config& cfg) {
    std::string which = cfg.get_str("cluster.extractor", "grid8");
    if (which == "grid8") return std::make_unique<GridFeatureExtractor>();
    if (which == "resnet152v2")
        throw ConfigError(
            "cluster.extractor = \"resnet152v2\" requires an external pretrained backbone "
            "runtime, which is not bundled; use \"grid8\" or plug in a FeatureExtractor");
    throw ConfigError("unknown cluster.extractor: \"" + which + "\"");
}

inline std::vector<FeatureVector> extract_features(const std::vector<FingerprintImage>& images,
                                                   const FeatureExtractor& extractor) {
    std::vector<FeatureVector> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        FeatureVector f;
        f.source_id = img.id;
        f.values = extractor.extract(img);
        if (int(f.values.size()) != extractor.dim())
            throw Error("extractor " + extractor.name() + " returned " +
                        std::to_string(f.values.size()) + " values, declared dim is " +
                        std::to_string(extractor.dim()));
        for (double v : f.values)
            if (!std::isfinite(v))
                throw Error("extractor " + extractor.name() + " produced a non-finite value on " +
                            img.id);
        out.push_back(std::move(f));
    }
    return out;
}

inline void l2_normalize(std::vector<FeatureVector>& features) {
    for (auto& f : features) {
        double n2 = 0;
        for (double v : f.values) n2 += v * v;
        if (n2 <= 0) continue;
        double inv = 1.0 / std::sqrt(n2);
        for (double& v : f.values) v *= inv;
    }
}

}  // namespace slp::cluster
