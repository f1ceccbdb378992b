#pragma once

#include <cstdint>
#include <random>

namespace artkin {

// splitmix64; used to derive independent sub-streams from one seed so that
// per-frame / per-part work is reproducible regardless of evaluation order.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix_seed(seed ^ mix_seed(tag));
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
  return mix_seed(sub_seed(seed, tag_a) ^ mix_seed(tag_b + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

}  // namespace artkin
