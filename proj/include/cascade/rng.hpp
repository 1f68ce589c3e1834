#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cascade {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a master seed and a path of counters, e.g.
/// (master, replication, algorithm, stream). Each step chains the previous
/// state through SplitMix64, so the result depends only on the counters and
/// never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags used with derive_seed.
enum class Stream : std::uint64_t {
    instance = 1,
    environment = 2,
    policy = 3,
    prior = 4,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                 std::uint64_t algorithm, Stream stream) {
    return derive_seed(master, {replication, algorithm, static_cast<std::uint64_t>(stream)});
}

}  // namespace cascade
