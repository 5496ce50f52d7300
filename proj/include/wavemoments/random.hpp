// Copyright 2026 The wavemoments Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WAVEMOMENTS_RANDOM_HPP
#define WAVEMOMENTS_RANDOM_HPP

#include <cstdint>
#include <random>

namespace wavemoments {

/// Identifies an independent random stream: a master seed plus a counter.
/// Replicate k of a simulation uses Stream{seed, k}, so results never depend
/// on which thread ran the replicate.
struct Stream {
  std::uint64_t seed = 0;
  std::uint64_t id = 0;

  Stream child(std::uint64_t sub) const {
    return Stream{splitmix(seed ^ splitmix(id + 0x632be59bd9b4e019ULL)), sub};
  }

  std::mt19937_64 engine() const {
    std::uint64_t s = splitmix(seed + 0x9e3779b97f4a7c15ULL * (id + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(s),
                      static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(id),
                      static_cast<std::uint32_t>(id >> 32)};
    return std::mt19937_64(seq);
  }

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
};

}  // namespace wavemoments

#endif  // WAVEMOMENTS_RANDOM_HPP
