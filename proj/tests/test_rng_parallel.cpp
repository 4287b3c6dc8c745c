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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "shapval/parallel.hpp"
#include "shapval/rng.hpp"

using namespace shapval;

TEST_CASE("streams are reproducible and keyed") {
  RngStream a(1, StreamTag::kTest, 0), b(1, StreamTag::kTest, 0);
  RngStream c(1, StreamTag::kTest, 1), d(2, StreamTag::kTest, 0), e(1, StreamTag::kSweep, 0);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 100; ++i) CHECK(a.NextU64() == b.NextU64());
  firsts.insert(RngStream(1, StreamTag::kTest, 1).NextU64());
  firsts.insert(RngStream(2, StreamTag::kTest, 0).NextU64());
  firsts.insert(RngStream(1, StreamTag::kSweep, 0).NextU64());
  firsts.insert(RngStream(1, StreamTag::kTest, 0).NextU64());
  CHECK(firsts.size() == 4);
  (void)c; (void)d; (void)e;
}

TEST_CASE("NextDouble lies in [0, 1)") {
  RngStream s(5, StreamTag::kTest, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = s.NextDouble();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n) + 1e-3);
}

TEST_CASE("NextBelow is uniform (chi-square)") {
  RngStream s(9, StreamTag::kTest, 3);
  const int bound = 7, n = 70000;
  std::vector<int> counts(bound, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = s.NextBelow(bound);
    REQUIRE(v < static_cast<std::uint64_t>(bound));
    ++counts[v];
  }
  double chi = 0.0;
  const double expected = static_cast<double>(n) / bound;
  for (int c : counts) chi += (c - expected) * (c - expected) / expected;
  CHECK(chi < 22.46);  // 99.9% quantile, 6 degrees of freedom
  CHECK(s.NextBelow(1) == 0);
}

TEST_CASE("Shuffle yields permutations; all 6 orders of 3 appear evenly") {
  std::vector<int> counts(6, 0);
  for (std::uint64_t t = 0; t < 6000; ++t) {
    RngStream s(0, StreamTag::kTest, t);
    std::vector<int> v{0, 1, 2};
    s.Shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == std::vector<int>{0, 1, 2});
    ++counts[v[0] * 2 + (v[1] > v[2] ? 1 : 0)];
  }
  for (int c : counts) CHECK(std::abs(c - 1000) < 4 * std::sqrt(1000.0 * 5.0 / 6.0));
}

TEST_CASE("PartialShuffle keeps the multiset") {
  RngStream s(3, StreamTag::kTest, 0);
  std::vector<int> v(10);
  std::iota(v.begin(), v.end(), 0);
  s.PartialShuffle(std::span<int>(v), 4);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("ParallelForChunks visits every chunk once") {
  for (std::size_t threads : {1u, 3u, 8u}) {
    ScopedThreadCount cap(threads);
    CHECK(MaxThreads() == threads);
    std::vector<std::atomic<int>> hits(257);
    ParallelForChunks(hits.size(), [&](std::size_t c) { hits[c].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("ParallelForChunks rethrows") {
  ScopedThreadCount cap(4);
  CHECK_THROWS_AS(ParallelForChunks(50,
                                    [](std::size_t c) {
                                      if (c == 17) throw std::runtime_error("boom");
                                    }),
                  std::runtime_error);
}

TEST_CASE("ScopedThreadCount restores the previous cap") {
  SetMaxThreads(5);
  {
    ScopedThreadCount cap(2);
    CHECK(MaxThreads() == 2);
  }
  CHECK(MaxThreads() == 5);
  SetMaxThreads(0);
  setenv("SHAPVAL_THREADS", "3", 1);
  CHECK(MaxThreads() == 3);
  unsetenv("SHAPVAL_THREADS");
  CHECK(MaxThreads() >= 1);
}

TEST_CASE("ChunkCount") {
  CHECK(ChunkCount(0, 64) == 0);
  CHECK(ChunkCount(64, 64) == 1);
  CHECK(ChunkCount(65, 64) == 2);
}
