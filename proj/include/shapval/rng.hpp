// Copyright 2026 The shapval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Counter-based random streams.
//
// Every random draw in the library comes from a stream keyed by
// (master seed, module tag, task index). A stream's output depends only on
// its key and the position within the stream, so tasks can be executed in
// any order or on any thread and still produce identical results. The
// distributions below are implemented here rather than taken from <random>
// because the standard distributions are not specified bit-for-bit.

#ifndef SHAPVAL_RNG_HPP_
#define SHAPVAL_RNG_HPP_

#include <cstdint>
#include <span>

namespace shapval {

enum class StreamTag : std::uint64_t {
  kPermutation = 1,
  kGroupTest = 2,
  kMeasurementMatrix = 3,
  kCompressivePermutation = 4,
  kBaselinePoint = 5,
  kRandomGame = 6,
  kSweep = 7,
  kTest = 99,
};

// SplitMix64 finaliser.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t index)
      : key_(Mix64(Mix64(seed ^ Mix64(static_cast<std::uint64_t>(tag))) ^
                   Mix64(index + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t NextU64() { return Mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double NextDouble() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., bound - 1}; bound must be positive. Lemire's
  // multiply-shift with rejection, so the result is exactly uniform.
  std::uint64_t NextBelow(std::uint64_t bound) {
    std::uint64_t x = NextU64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = NextU64();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool NextBit() { return (NextU64() >> 63) != 0; }

  // Uniform random permutation of `items` in place (Fisher-Yates).
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(NextBelow(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Moves a uniform random k-subset of `items` to its first k slots
  // (partial Fisher-Yates).
  template <typename T>
  void PartialShuffle(std::span<T> items, std::size_t k) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
      const auto j = i + static_cast<std::size_t>(NextBelow(n - i));
      std::swap(items[i], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace shapval

#endif  // SHAPVAL_RNG_HPP_
