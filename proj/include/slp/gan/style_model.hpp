#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slp/error.hpp"
#include "slp/gan/nets.hpp"
#include "slp/image.hpp"
#include "slp/nn/net.hpp"

namespace slp::gan {

enum class Direction { RolledToLatent, LatentToRolled };

// One row of the per-epoch training log.
struct EpochLoss {
    int epoch = 0;
    double g_total = 0, cyc_a = 0, cyc_b = 0;
    double d_a_global = 0, d_a_patch = 0, d_b_global = 0, d_b_patch = 0;
};

inline std::string loss_log_to_csv(const std::vector<EpochLoss>& rows) {
    std::string out =
        "epoch,loss_G_total,loss_cyc_A,loss_cyc_B,loss_D_A_global,loss_D_A_patch,"
        "loss_D_B_global,loss_D_B_patch\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch,
                      r.g_total, r.cyc_a, r.cyc_b, r.d_a_global, r.d_a_patch, r.d_b_global,
                      r.d_b_patch);
        out += buf;
    }
    return out;
}

// [0,255] pixel <-> [-1,1] tensor scaling used at every generator boundary.
template <typename T>
nn::Tensor<T> image_to_tensor(const FingerprintImage& img) {
    nn::Tensor<T> t(1, img.height, img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        t.v[i] = T(img.pixels[i]) / T(127.5) - T(1);
    return t;
}

template <typename T>
FingerprintImage tensor_to_image(const nn::Tensor<T>& t, const std::string& id,
                                 int resolution_ppi = kCanonicalPpi) {
    if (t.c != 1) throw InvalidInput("tensor_to_image: expected 1 channel");
    FingerprintImage img(id, t.w, t.h, resolution_ppi);
    for (std::size_t i = 0; i < t.v.size(); ++i)
        img.pixels[i] = clamp_u8((float(t.v[i]) + 1.0f) * 127.5f);
    return img;
}

// A trained style: forward generator G (rolled -> latent), reverse generator
// F, and enough metadata to rebuild both nets from disk.
template <typename T = float>
struct StyleModel {
    std::string model_id;
    int cluster_index = -1;  // -1 marks the coarse model
    GeneratorSpec spec;
    nn::Net<T> G;
    nn::Net<T> F;
    std::string config_snapshot;  // verbatim text stored alongside weights
    std::vector<EpochLoss> loss_log;

    void build(Rng& rng) {
        build_generator(G, spec, rng);
        build_generator(F, spec, rng);
    }

    FingerprintImage translate(const FingerprintImage& img, Direction dir) {
        nn::Net<T>& net = (dir == Direction::RolledToLatent) ? G : F;
        nn::Tensor<T> out = net.forward(image_to_tensor<T>(img));
        if (out.h != img.height || out.w != img.width)
            throw Error("translate: generator changed image shape");
        return tensor_to_image(out, img.id, img.resolution_ppi);
    }

    void save(const std::string& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create checkpoint dir: " + dir);
        {
            std::ofstream os(dir + "/weights", std::ios::binary);
            if (!os) throw IoError("cannot open for write: " + dir + "/weights");
            std::ostringstream hdr;
            hdr << model_id << "\n"
                << spec.residual_blocks << " " << spec.base_channels << " ";
            char slope[64];
            std::snprintf(slope, sizeof(slope), "%.17g", spec.leaky_slope);
            hdr << slope << " " << cluster_index << "\n";
            std::string h = hdr.str();
            std::uint32_t hlen = std::uint32_t(h.size());
            os.write(reinterpret_cast<const char*>(&hlen), 4);
            os.write(h.data(), hlen);
            nn::save_weights(G, os);
            nn::save_weights(F, os);
        }
        {
            std::ofstream os(dir + "/config-snapshot");
            if (!os) throw IoError("cannot open for write: " + dir + "/config-snapshot");
            os << config_snapshot;
            if (!config_snapshot.empty() && config_snapshot.back() != '\n') os << "\n";
        }
        {
            std::ofstream os(dir + "/loss-log.csv");
            if (!os) throw IoError("cannot open for write: " + dir + "/loss-log.csv");
            os << loss_log_to_csv(loss_log);
        }
    }

    static StyleModel load(const std::string& dir) {
        StyleModel m;
        std::ifstream is(dir + "/weights", std::ios::binary);
        if (!is) throw IoError("cannot open: " + dir + "/weights");
        std::uint32_t hlen = 0;
        is.read(reinterpret_cast<char*>(&hlen), 4);
        if (!is || hlen == 0 || hlen > 4096) throw IoError(dir + "/weights: bad header");
        std::string hdr(hlen, '\0');
        is.read(hdr.data(), hlen);
        std::istringstream hs(hdr);
        if (!std::getline(hs, m.model_id) || m.model_id.empty())
            throw IoError(dir + "/weights: missing model id");
        if (!(hs >> m.spec.residual_blocks >> m.spec.base_channels >> m.spec.leaky_slope >>
              m.cluster_index))
            throw IoError(dir + "/weights: unparsable header");
        Rng rng(1);  // init values are overwritten by the load below
        m.build(rng);
        nn::load_weights(m.G, is, dir + "/weights");
        nn::load_weights(m.F, is, dir + "/weights");
        std::ifstream snap(dir + "/config-snapshot");
        if (!snap) throw IoError("cannot open: " + dir + "/config-snapshot");
        std::ostringstream ss;
        ss << snap.rdbuf();
        m.config_snapshot = ss.str();
        return m;
    }
};

}  // namespace slp::gan
