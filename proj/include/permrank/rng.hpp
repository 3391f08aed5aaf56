#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace permrank {

// All randomness in the library flows through these helpers. std::mt19937_64
// produces an identical bit stream everywhere, but the standard distributions
// (uniform_int_distribution, bernoulli_distribution, shuffle) do not, so the
// draw algorithms are spelled out here.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent substream for a (seed, unit) pair. Parallel work derives one
// stream per unit so scheduling order cannot change the results.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t unit) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(unit + 0x9e3779b97f4a7c15ULL)));
}

inline std::mt19937_64 substream(std::uint64_t seed, std::string_view name) {
    return substream(seed, fnv1a64(name));
}

// Unbiased draw from [0, bound) by rejection.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

// Bernoulli(p) using a 53-bit uniform, matching ldexp(rng() >> 11, -53).
inline bool draw_bernoulli(std::mt19937_64& rng, double p) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return u < p;
}

inline double draw_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void fisher_yates(std::mt19937_64& rng, std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(draw_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

// First k of a Fisher-Yates pass over [0, n), returned sorted ascending so
// downstream tie-breaking by index stays well defined.
inline std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(draw_below(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace permrank
