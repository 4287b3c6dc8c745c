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

#include "shapval/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shapval/error.hpp"
#include "shapval/parallel.hpp"

namespace shapval {
namespace {

constexpr std::size_t kPermutationChunk = 64;

void CheckEpsilonDelta(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ArgumentError("delta must lie in (0, 1)");
  }
}

}  // namespace

std::uint64_t RequiredPermutations(double r, std::size_t n, double epsilon,
                                   double delta) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ArgumentError("range r must be positive");
  if (n == 0) throw ArgumentError("n must be at least 1");
  CheckEpsilonDelta(epsilon, delta);
  const double nd = static_cast<double>(n);
  const double t = 2.0 * r * r * nd / (epsilon * epsilon) * std::log(2.0 * nd / delta);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t)));
}

PermutationBudget BudgetFor(const Game& game, double epsilon, double delta) {
  PermutationBudget b;
  b.t_permutations =
      RequiredPermutations(game.range_r(), game.n_players(), epsilon, delta);
  b.epsilon = epsilon;
  b.delta = delta;
  b.range_r = game.range_r();
  return b;
}

void PermutationMarginals(const Game& game, std::uint64_t seed, StreamTag tag,
                          std::uint64_t t, std::span<double> marginals) {
  const std::size_t n = game.n_players();
  std::vector<Player> order(n);
  std::iota(order.begin(), order.end(), Player{0});
  RngStream rng(seed, tag, t);
  rng.Shuffle(std::span<Player>(order));

  PlayerSubset prefix(n);
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Player p = order[k];
    prefix.Insert(p);
    // The full coalition is U(I), already cached by the game.
    const double u = k + 1 == n ? game.u_total() : game(prefix);
    marginals[p] = u - prev;
    prev = u;
  }
}

ValueVector EstimatePermutation(const Game& game, const PermutationBudget& budget,
                                std::uint64_t seed) {
  if (budget.t_permutations == 0) {
    throw ArgumentError("permutation budget must be at least 1");
  }
  const std::size_t n = game.n_players();
  const std::uint64_t t_total = budget.t_permutations;
  const std::size_t n_chunks = ChunkCount(t_total, kPermutationChunk);

  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(n, 0.0));
  ParallelForChunks(n_chunks, [&](std::size_t c) {
    std::vector<double> marginals(n);
    auto& acc = partial[c];
    const std::uint64_t begin = c * kPermutationChunk;
    const std::uint64_t end = std::min<std::uint64_t>(t_total, begin + kPermutationChunk);
    for (std::uint64_t t = begin; t < end; ++t) {
      PermutationMarginals(game, seed, StreamTag::kPermutation, t, marginals);
      for (std::size_t i = 0; i < n; ++i) acc[i] += marginals[i];
    }
  });

  ValueVector out;
  out.method = Method::kPermutation;
  out.seed = seed;
  out.epsilon = budget.epsilon;
  out.delta = budget.delta;
  out.values.assign(n, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] += acc[i];
  }
  for (auto& v : out.values) v /= static_cast<double>(t_total);
  out.eval_count = t_total * n;
  return out;
}

}  // namespace shapval
