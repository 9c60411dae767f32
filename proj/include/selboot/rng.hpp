// Copyright 2026 The selboot Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>

namespace selboot {

std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256**; satisfies UniformRandomBitGenerator so it plugs into the
// standard distributions.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;
  explicit Xoshiro256(std::uint64_t seed);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t s_[4];
};

// Engine for one (seed, a, b, c) counter key. Streams for different keys are
// independent of each other and of the order in which they are created, which
// is what makes the counting loops reproducible under any thread count.
Xoshiro256 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace selboot
