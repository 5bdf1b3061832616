#pragma once

#include <cstdint>

namespace mmrisk::detail {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

// Finalizer of the splitmix64 generator: a cheap bijective mix with good
// avalanche, used both as the per-draw hash of the counter-based stream and
// to derive independent sub-seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic seed for the idx-th internal run of a composite experiment.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t idx) {
    return mix64(seed ^ mix64(idx + kGolden64));
}

} // namespace mmrisk::detail
