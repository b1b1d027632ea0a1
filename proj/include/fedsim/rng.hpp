#pragma once

#include <cstdint>
#include <random>

namespace fedsim {

// splitmix64 step; used to whiten and combine seed material.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed plus a purpose tag
// and up to two indices (round, client, ...). Same inputs, same stream.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t tag,
                              std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  h = splitmix64(h ^ tag);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

// Stream tags. Keep values stable: they are part of the reproducibility
// contract (a run is a pure function of the config including its seed).
namespace seed_tag {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kModelInit = 3;
inline constexpr std::uint64_t kClientShuffle = 4;
inline constexpr std::uint64_t kAttackTrain = 5;
inline constexpr std::uint64_t kNoise = 6;
}  // namespace seed_tag

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace fedsim
