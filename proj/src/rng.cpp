// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#include "selboot/rng.hpp"

namespace selboot {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t st = seed;
  for (auto& s : s_) s = splitmix64(st);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

Xoshiro256::result_type Xoshiro256::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

Xoshiro256 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // Fold the key through splitmix so nearby counters land far apart.
  std::uint64_t st = seed;
  std::uint64_t h = splitmix64(st);
  st = h ^ (a + 0x632be59bd9b4e019ULL);
  h = splitmix64(st);
  st = h ^ (b + 0x8cb92ba72f3d8dd7ULL);
  h = splitmix64(st);
  st = h ^ (c + 0x52dce729da3ed4f1ULL);
  h = splitmix64(st);
  return Xoshiro256(h);
}

}  // namespace selboot
