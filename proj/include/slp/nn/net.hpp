#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "slp/error.hpp"
#include "slp/nn/layers.hpp"

namespace slp::nn {

// Owns a layer stack plus a flat view of its parameter blocks.
template <typename T>
class Net {
public:
    Net() : seq_(std::make_unique<Sequential<T>>()) {}

    Sequential<T>& seq() { return *seq_; }

    // Call once after the last add(); caches the parameter block list.
    void finalize() {
        params_.clear();
        seq_->collect_params(params_);
    }

    const std::vector<ParamBlock<T>*>& params() const { return params_; }

    Tensor<T> forward(const Tensor<T>& x) { return seq_->forward(x); }
    Tensor<T> backward(const Tensor<T>& gy) { return seq_->backward(gy); }

    void zero_grad() {
        for (auto* p : params_)
            std::fill(p->g.begin(), p->g.end(), T(0));
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (auto* p : params_) n += p->w.size();
        return n;
    }

    bool params_finite() const {
        for (auto* p : params_)
            for (auto v : p->w)
                if (!std::isfinite(double(v))) return false;
        return true;
    }

    void copy_weights_from(const Net& other) {
        if (params_.size() != other.params_.size()) throw Error("net copy: layout mismatch");
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (params_[i]->w.size() != other.params_[i]->w.size())
                throw Error("net copy: block size mismatch at " + params_[i]->name);
            params_[i]->w = other.params_[i]->w;
        }
    }

private:
    std::unique_ptr<Sequential<T>> seq_;
    std::vector<ParamBlock<T>*> params_;
};

namespace detail {
constexpr std::uint32_t kWeightsMagic = 0x53504c57;  // "SLPW"
constexpr std::uint32_t kWeightsVersion = 1;
}  // namespace detail

// Raw little-endian dump: header, then per block a name, element width and
// payload. Loading cross-checks against the net built from the same config.
template <typename T>
void save_weights(const Net<T>& net, std::ostream& os) {
    auto put_u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(detail::kWeightsMagic);
    put_u32(detail::kWeightsVersion);
    put_u32(std::uint32_t(sizeof(T)));
    put_u64(net.params().size());
    for (const auto* p : net.params()) {
        put_u64(p->name.size());
        os.write(p->name.data(), std::streamsize(p->name.size()));
        put_u64(p->w.size());
        os.write(reinterpret_cast<const char*>(p->w.data()),
                 std::streamsize(p->w.size() * sizeof(T)));
    }
    if (!os) throw IoError("failed writing weights stream");
}

template <typename T>
void save_weights(const Net<T>& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    save_weights(net, os);
}

template <typename T>
void load_weights(Net<T>& net, std::istream& is, const std::string& origin = "weights") {
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_u64 = [&]() {
        std::uint64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    if (get_u32() != detail::kWeightsMagic) throw IoError(origin + ": not a weights file");
    if (get_u32() != detail::kWeightsVersion) throw IoError(origin + ": unsupported version");
    if (get_u32() != sizeof(T)) throw IoError(origin + ": scalar width mismatch");
    std::uint64_t nblocks = get_u64();
    if (nblocks != net.params().size())
        throw IoError(origin + ": parameter block count mismatch (checkpoint does not match "
                               "the configured architecture)");
    for (auto* p : net.params()) {
        std::uint64_t nlen = get_u64();
        std::string name(nlen, '\0');
        is.read(name.data(), std::streamsize(nlen));
        if (name != p->name) throw IoError(origin + ": block name mismatch: expected " +
                                           p->name + ", got " + name);
        std::uint64_t count = get_u64();
        if (count != p->w.size()) throw IoError(origin + ": block size mismatch at " + p->name);
        is.read(reinterpret_cast<char*>(p->w.data()), std::streamsize(count * sizeof(T)));
    }
    if (!is) throw IoError(origin + ": truncated weights file");
}

template <typename T>
void load_weights(Net<T>& net, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    load_weights(net, is, path);
}

}  // namespace slp::nn
