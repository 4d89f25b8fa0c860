#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace dissensus {

using Rng = std::mt19937_64;

// Stream salts. Each consumer of randomness draws from its own stream so that
// enabling one option does not shift the draws of another.
enum class Stream : std::uint32_t {
    Scheduler = 0x5c4ed,
    Delta = 0xde17a,
    Event = 0xe7e47,
    Init = 0x1417,
};

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 seeded with a single word is fully specified by the standard, so
// the streams are identical on every conforming implementation.
inline Rng make_stream(std::uint64_t seed, Stream salt, std::uint64_t index = 0) {
    const auto mixed = splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(salt)) ^ index);
    return Rng(mixed);
}

// Uniform draw in [0, bound). uniform_int_distribution is implementation
// defined, which would break cross-platform replay of traces.
inline std::uint64_t draw_below(Rng& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = Rng::max() - (Rng::max() % bound + 1) % bound;
    std::uint64_t v = rng();
    while (v > limit) v = rng();
    return v % bound;
}

// Uniformly random k-subset, returned in input order.
template <typename T>
std::vector<T> sample_subset(const std::vector<T>& items, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(items.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i < idx.size(); ++i) {
        const auto j = i + static_cast<std::size_t>(draw_below(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(items[i]);
    return out;
}

}  // namespace dissensus
