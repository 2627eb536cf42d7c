// Copyright 2026 The vflite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "vflite/error.hpp"

namespace vflite {

// Deterministic RNG: mt19937_64 is bit-specified by the standard, and the
// value mappings below are hand-rolled because the std::*_distribution
// classes are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi]; lo == hi returns exactly lo.
  double uniform(double lo, double hi) {
    check(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
          "Rng::uniform: invalid bounds");
    return lo + (hi - lo) * uniform01();
  }

  // Standard normal via Box-Muller (two draws per value, no caching).
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * M_PI * u2);
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    check(n > 0, "Rng::below: n must be positive");
    return static_cast<uint64_t>(uniform01() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 eng_;
};

// Decorrelated per-item seed for parallel work streams (splitmix64 over a
// combined counter).
inline uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t item = 0) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream * 1000003ull + item + 1ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace vflite
