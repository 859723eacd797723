// Copyright 2026 The linvoc Authors
// SPDX-License-Identifier: Apache-2.0

// Named sub-seed derivation. Every random stream in the project is
// derive_seed(root, "<purpose>", index) so any component can be re-run in
// isolation: seed = splitmix64(root ^ fnv1a(name) ^ splitmix64(index)).

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace linvoc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
  return splitmix64(root ^ fnv1a(name) ^ splitmix64(index));
}

using Rng = std::mt19937_64;

template <typename T = float>
std::vector<T> gaussian_vector(std::size_t n, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(nd(rng));
  return v;
}

}  // namespace linvoc
