// Copyright 2026 The evcoref Authors.
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

// Portable seeded randomness. std::mt19937_64 has a fully specified output
// sequence, but the standard distributions do not, so everything that must
// be reproducible across toolchains draws through the helpers below.

#ifndef EVCOREF_RANDOM_H_
#define EVCOREF_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace evcoref {

using Rng = std::mt19937_64;

// 64-bit FNV-1a.
inline uint64_t Fnv1a64(std::string_view data,
                        uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1).
inline double UniformReal(Rng &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformReal(Rng &rng, double lo, double hi) {
  return lo + (hi - lo) * UniformReal(rng);
}

// Uniform in [0, n). The modulo bias is below 2^-40 for any n we use.
inline size_t UniformIndex(Rng &rng, size_t n) {
  return static_cast<size_t>(rng() % n);
}

// Standard normal via Box-Muller.
inline double Gaussian(Rng &rng) {
  double u1 = UniformReal(rng);
  double u2 = UniformReal(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void Shuffle(std::vector<T> &items, Rng &rng) {
  for (size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[UniformIndex(rng, i)]);
  }
}

// `count` distinct indices from [0, n), in draw order.
inline std::vector<size_t> SampleIndices(size_t n, size_t count, Rng &rng) {
  std::vector<size_t> all(n);
  for (size_t i = 0; i < n; ++i) all[i] = i;
  Shuffle(all, rng);
  all.resize(count < n ? count : n);
  return all;
}

}  // namespace evcoref

#endif  // EVCOREF_RANDOM_H_
