#pragma once

// Deterministic random number generation. Hand-rolled so that streams are
// bit-stable across platforms and standard library versions; std::mt19937
// would be stable too, but the std distributions are not.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace cholcast {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// FNV-1a; used to derive per-module seeds from (global seed, label).
inline uint64_t hash_label(std::string_view label) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// One global seed fans out to independent per-purpose streams.
inline uint64_t derive_seed(uint64_t seed, std::string_view label, uint64_t salt = 0) {
    uint64_t s = seed ^ hash_label(label) ^ (salt * 0x9e3779b97f4a7c15ull);
    return splitmix64(s);
}

// xoshiro256** with splitmix64 seeding.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [0, n), rejection sampled.
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) fail_internal("uniform_int: empty range");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    // Standard normal via Box-Muller (no cached spare; stream stays simple).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Poisson via Knuth's product method; lambda split into <= 30 chunks so
    // exp(-lambda) stays well away from underflow. Exact distribution.
    uint64_t poisson(double lambda) {
        if (!(lambda >= 0.0)) fail_internal("poisson: negative rate");
        uint64_t total = 0;
        while (lambda > 30.0) {
            total += poisson_small(30.0);
            lambda -= 30.0;
        }
        return total + poisson_small(lambda);
    }

    // First k elements of a Fisher-Yates shuffle: k distinct indices from [0, n).
    std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        if (k > n) k = n;
        for (size_t i = 0; i < k; ++i) {
            const size_t j = i + static_cast<size_t>(uniform_int(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t poisson_small(double lambda) {
        if (lambda <= 0.0) return 0;
        const double threshold = std::exp(-lambda);
        uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > threshold);
        return k - 1;
    }

    uint64_t s_[4];
};

} // namespace cholcast
