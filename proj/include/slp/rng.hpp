#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace slp {

// Deterministic RNG used everywhere randomness matters. Distributions are
// hand-rolled so results do not depend on the standard library build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // xorshift* keeps the state tiny and splits cleanly across streams.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) { return n ? next_u64() % n : 0; }

    // Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Mixes a base seed with stream tags so sub-tasks get independent,
// reproducible streams (per image, per epoch, per step, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    // splitmix64 finalizer. Each word is whitened before it touches the
    // accumulator; nearby (base, tag) pairs cannot cancel in the xor.
    auto fin = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = fin(base + 0x9e3779b97f4a7c15ull);
    h = fin(h ^ fin(a + 0x8ebc6af09c88c6e3ull));
    h = fin(h ^ fin(b + 0x589965cc75374cc3ull));
    h = fin(h ^ fin(c + 0x1d8e4e27c47d124full));
    return h ? h : 1;
}

}  // namespace slp
