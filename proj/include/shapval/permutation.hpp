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

// Monte Carlo permutation sampling with a Hoeffding sample-size bound.

#ifndef SHAPVAL_PERMUTATION_HPP_
#define SHAPVAL_PERMUTATION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "shapval/game.hpp"
#include "shapval/rng.hpp"

namespace shapval {

struct PermutationBudget {
  std::uint64_t t_permutations = 1;
  std::optional<double> epsilon;
  std::optional<double> delta;
  double range_r = 1.0;
};

// ceil((2 r^2 n / eps^2) ln(2n / delta)), natural log.
std::uint64_t RequiredPermutations(double r, std::size_t n, double epsilon,
                                   double delta);

// Budget sized by RequiredPermutations for the game's declared range.
PermutationBudget BudgetFor(const Game& game, double epsilon, double delta);

// Shared by the permutation and compressive estimators: draws permutation t
// from the stream (seed, tag, t) and writes the N marginal contributions
// along it into `marginals` (indexed by player). Prefix utilities are reused,
// so each call costs N evaluations.
void PermutationMarginals(const Game& game, std::uint64_t seed, StreamTag tag,
                          std::uint64_t t, std::span<double> marginals);

// s_i ~ (1/T) sum_t marginal of i in permutation t.
ValueVector EstimatePermutation(const Game& game, const PermutationBudget& budget,
                                std::uint64_t seed);

}  // namespace shapval

#endif  // SHAPVAL_PERMUTATION_HPP_
