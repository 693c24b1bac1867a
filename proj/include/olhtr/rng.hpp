// SPDX-License-Identifier: Apache-2.0
//
// Portable draws on top of std::mt19937_64. The standard distributions are
// implementation-defined; these are not, so seeded runs reproduce anywhere.

#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace olhtr {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

template <typename V>
void shuffle(std::vector<V>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

}  // namespace olhtr
