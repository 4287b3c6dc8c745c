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

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "shapval/error.hpp"
#include "shapval/parallel.hpp"
#include "shapval/permutation.hpp"

using namespace shapval;
using doctest::Approx;

TEST_CASE("required permutations") {
  // Frozen from a 50-digit evaluation of ceil((2 r^2 n / eps^2) ln(2n/delta)).
  CHECK(RequiredPermutations(1, 10, 0.1, 0.05) == 11983);
  CHECK(RequiredPermutations(1, 1, 10, 0.5) == 1);
  CHECK(RequiredPermutations(1, 3, 0.15, 0.1) == 1092);
  const double base = 2.0 * 5 / (0.2 * 0.2) * std::log(2.0 * 5 / 0.1);
  CHECK(RequiredPermutations(1, 5, 0.2, 0.1) == static_cast<std::uint64_t>(std::ceil(base)));
  CHECK(RequiredPermutations(2, 5, 0.2, 0.1) == static_cast<std::uint64_t>(std::ceil(4 * base)));
  CHECK_THROWS_AS(RequiredPermutations(1, 5, 0.0, 0.1), ArgumentError);
  CHECK_THROWS_AS(RequiredPermutations(1, 5, 0.1, 1.0), ArgumentError);
  CHECK_THROWS_AS(RequiredPermutations(1, 0, 0.1, 0.1), ArgumentError);
}

TEST_CASE("additive game is exact after one permutation") {
  const Game g = MakeAdditiveGame({1, 2, 3});
  for (std::uint64_t seed : {0u, 5u, 99u}) {
    PermutationBudget b;
    b.t_permutations = 1;
    const auto v = EstimatePermutation(g, b, seed);
    CHECK(v.values == std::vector<double>{1, 2, 3});
    CHECK(v.eval_count == 3);
    CHECK(v.seed == seed);
  }
}

TEST_CASE("T = 0 is rejected") {
  PermutationBudget b;
  b.t_permutations = 0;
  CHECK_THROWS_AS(EstimatePermutation(MakeGloveGame(), b, 1), ArgumentError);
}

TEST_CASE("glove game within the target at seed 42") {
  const Game g = MakeGloveGame();
  const auto v = EstimatePermutation(g, BudgetFor(g, 0.1, 0.05), 42);
  CHECK(v.eval_count == RequiredPermutations(1, 3, 0.1, 0.05) * 3);
  CHECK(oracle::L2(v.values, {2.0 / 3, 1.0 / 6, 1.0 / 6}) <= 0.1);
  CHECK(v.epsilon == 0.1);
}

TEST_CASE("each permutation's marginals sum to U(I)") {
  const Game g = MakeRandomGame(6, 4);
  std::vector<double> m(6);
  for (std::uint64_t t = 0; t < 20; ++t) {
    PermutationMarginals(g, 3, StreamTag::kPermutation, t, m);
    double sum = 0.0;
    for (double x : m) sum += x;
    CHECK(sum == Approx(g.u_total()).epsilon(1e-12));
  }
}

TEST_CASE("estimates are unbiased across seeds") {
  const Game g = MakeRandomGame(5, 8);
  const auto exact = ExactShapleySubsets(g).values;
  PermutationBudget b;
  b.t_permutations = 50;
  std::vector<double> mean(5, 0.0);
  const int reps = 200;
  for (int s = 0; s < reps; ++s) {
    const auto v = EstimatePermutation(g, b, static_cast<std::uint64_t>(s));
    for (int i = 0; i < 5; ++i) mean[i] += v.values[i] / reps;
  }
  // Marginals lie in [-1, 1], so the standard error is at most 1/sqrt(10000).
  for (int i = 0; i < 5; ++i) CHECK(std::abs(mean[i] - exact[i]) < 4.0 * 0.01);
}

TEST_CASE("thread count does not change the output") {
  const Game g = MakeRandomGame(9, 2);
  PermutationBudget b;
  b.t_permutations = 1000;
  ValueVector one, many;
  {
    ScopedThreadCount cap(1);
    one = EstimatePermutation(g, b, 7);
  }
  {
    ScopedThreadCount cap(8);
    many = EstimatePermutation(g, b, 7);
  }
  CHECK(one.values == many.values);
}
