#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace coldex {

using RngEngine = std::mt19937_64;

/// splitmix64 finalizer; decorrelates structured seed inputs.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic per-stream seed from a master seed and stream indices
/// (grid point, trial number, ...). Same inputs give the same stream on
/// every platform and thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t s : stream)
        h = mix64(h ^ mix64(s));
    return h;
}

inline RngEngine make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> stream) {
    return RngEngine(derive_seed(master, stream));
}

/// Uniform draw on (0, 1]; safe to pass through log().
inline double uniform_positive(RngEngine& rng) {
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace coldex
