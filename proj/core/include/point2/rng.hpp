// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace point2 {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for (root seed, stream index). Streams never share
/// state, so results do not depend on evaluation order.
inline std::mt19937_64 make_stream(std::uint64_t root, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace point2
