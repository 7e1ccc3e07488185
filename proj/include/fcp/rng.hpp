#pragma once

#include <cstdint>
#include <random>

namespace fcp {

// All randomness in the library flows from a user-supplied seed through
// these helpers, so experiments replay exactly.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic sub-seed for unit `index` (tree, fold, chain, sweep cell).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace fcp
