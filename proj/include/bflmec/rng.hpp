#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace bflmec {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Seeded random source. Every stochastic choice in the artifact goes through
// this wrapper instead of std:: distributions, so that a (seed, tag) pair
// pins the exact byte-level output independent of the standard library build.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // Derives an independent stream for one purpose ("client:3:train", ...).
    // Separate streams keep e.g. connectivity draws identical across runs
    // that differ only in training or incentive settings.
    static Rng stream(uint64_t master_seed, std::string_view tag) {
        uint64_t s = master_seed ^ fnv1a64(tag);
        uint64_t a = splitmix64(s);
        uint64_t b = splitmix64(s);
        return Rng(a ^ (b << 1));
    }

    uint64_t u64() { return eng_(); }

    // Unbiased uniform draw in [0, bound).
    uint64_t below(uint64_t bound) {
        if (bound <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % bound;
    }

    // Uniform in [lo, hi], inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double real01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return real01() < p; }

    // Standard normal via the polar method (one spare cached).
    double gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * real01() - 1.0;
            v = 2.0 * real01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<uint32_t> permutation(uint32_t n) {
        std::vector<uint32_t> p(n);
        for (uint32_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bflmec
