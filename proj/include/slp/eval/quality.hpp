#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "slp/config.hpp"
#include "slp/error.hpp"
#include "slp/image.hpp"
#include "slp/png_io.hpp"

namespace slp::eval {

enum class QualitySource { ExternalNfiq2, InternalProxy };

inline const char* to_string(QualitySource s) {
    return s == QualitySource::ExternalNfiq2 ? "external-nfiq2" : "internal-proxy";
}

struct QualityScore {
    std::string image_id;
    double value = 0;  // [0, 100]
    QualitySource source = QualitySource::InternalProxy;
};

// Ridge-structure proxy in [0, 100]: gradient-energy-weighted mean of the
// local structure-tensor coherence over 8x8 blocks. Featureless images score
// 0; added noise decoheres the field and lowers the score.
inline double quality_proxy(const FingerprintImage& img) {
    const int block = 8;
    const int bw = img.width / block, bh = img.height / block;
    if (bw == 0 || bh == 0) return 0.0;
    double num = 0, den = 0;
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            double gxx = 0, gyy = 0, gxy = 0;
            for (int y = by * block; y < (by + 1) * block; ++y) {
                for (int x = bx * block; x < (bx + 1) * block; ++x) {
                    int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
                    int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
                    double gx = (img.at(xp, y) - img.at(xm, y)) / 255.0;
                    double gy = (img.at(x, yp) - img.at(x, ym)) / 255.0;
                    gxx += gx * gx;
                    gyy += gy * gy;
                    gxy += gx * gy;
                }
            }
            double energy = gxx + gyy;
            if (energy <= 1e-12) continue;  // flat block: no evidence either way
            double coh = std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy) / energy;
            num += energy * coh;
            den += energy;
        }
    }
    if (den <= 0) return 0.0;
    return 100.0 * num / den;
}

struct QualityToolConfig {
    std::string nfiq2_path;  // empty: use the internal proxy
    std::string work_dir = "/tmp";

    static QualityToolConfig from_config(const Config& c) {
        QualityToolConfig q;
        q.nfiq2_path = c.get_str("quality.nfiq2_path", "");
        if (q.nfiq2_path.empty())
            if (const char* env = std::getenv("NFIQ2_BIN")) q.nfiq2_path = env;
        q.work_dir = c.get_str("quality.work_dir", q.work_dir);
        return q;
    }
};

struct QualityFailure {
    std::string image_id;
    std::string message;
};

struct QualityHistogram {
    std::vector<QualityScore> scores;
    std::array<int, 20> bins{};  // 20 bins over [0, 100]
    std::vector<QualityFailure> failures;
    QualitySource source = QualitySource::InternalProxy;
};

namespace detail {

// Writes the image for the external tool, runs it, parses stdout as the
// integer score. Throws on any failure; the caller records and continues.
inline double run_nfiq2(const std::string& bin, const std::string& work_dir,
                        const FingerprintImage& img) {
    namespace fs = std::filesystem;
    fs::create_directories(work_dir);
    std::string png = work_dir + "/nfiq2-in.png";
    write_png(img, png);
    std::string cmd = bin + " \"" + png + "\" 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw Error("cannot launch NFIQ2 binary: " + bin);
    char buf[256];
    std::string out;
    while (fgets(buf, sizeof(buf), pipe)) out += buf;
    int rc = pclose(pipe);
    if (rc != 0) throw Error("NFIQ2 exited with status " + std::to_string(rc));
    try {
        double v = std::stod(out);
        if (v < 0 || v > 100) throw Error("NFIQ2 score out of range: " + out);
        return v;
    } catch (const std::invalid_argument&) {
        throw Error("unparsable NFIQ2 output: \"" + out + "\"");
    }
}

}  // namespace detail

// One score per image from a single source (external scores and the proxy
// are never mixed in one histogram), plus 20 fixed-width bins over [0,100].
inline QualityHistogram quality_histogram(const std::vector<FingerprintImage>& images,
                                          const QualityToolConfig& cfg = {}) {
    QualityHistogram out;
    out.source = cfg.nfiq2_path.empty() ? QualitySource::InternalProxy
                                        : QualitySource::ExternalNfiq2;
    for (const auto& img : images) {
        double v = 0;
        if (out.source == QualitySource::ExternalNfiq2) {
            try {
                v = detail::run_nfiq2(cfg.nfiq2_path, cfg.work_dir, img);
            } catch (const std::exception& e) {
                out.failures.push_back({img.id, e.what()});
                continue;
            }
        } else {
            v = quality_proxy(img);
        }
        out.scores.push_back({img.id, v, out.source});
        int bin = std::min(19, int(v / 5.0));
        ++out.bins[std::size_t(std::max(0, bin))];
    }
    return out;
}

inline std::string quality_histogram_csv(const QualityHistogram& h) {
    std::string out = "bin_low,bin_high,count\n";
    char buf[64];
    for (int i = 0; i < 20; ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d\n", i * 5, (i + 1) * 5, h.bins[std::size_t(i)]);
        out += buf;
    }
    return out;
}

}  // namespace slp::eval
