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

// Cooperative games, player subsets, exact Shapley oracles and synthetic
// ground-truth games.

#ifndef SHAPVAL_GAME_HPP_
#define SHAPVAL_GAME_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shapval {

using Player = std::size_t;

// Set of players drawn from {0, ..., n-1}, stored as a bit-set.
class PlayerSubset {
 public:
  PlayerSubset() = default;
  explicit PlayerSubset(std::size_t n_players);

  static PlayerSubset FromMask(std::size_t n_players, std::uint64_t mask);
  static PlayerSubset Full(std::size_t n_players);
  static PlayerSubset FromMembers(std::size_t n_players,
                                  std::span<const Player> members);

  std::size_t universe_size() const { return n_; }
  bool Contains(Player p) const {
    return (words_[p >> 6] >> (p & 63)) & 1ULL;
  }
  void Insert(Player p) { words_[p >> 6] |= 1ULL << (p & 63); }
  void Erase(Player p) { words_[p >> 6] &= ~(1ULL << (p & 63)); }
  std::size_t Count() const;
  bool Empty() const { return Count() == 0; }

  // Members in ascending player index.
  std::vector<Player> Members() const;

  // Low 64 bits of the membership; exact when universe_size() <= 64.
  std::uint64_t LowMask() const { return words_.empty() ? 0 : words_[0]; }

  bool operator==(const PlayerSubset& other) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

using UtilityFn = std::function<double(const PlayerSubset&)>;

// A cooperative game with a bounded utility U: 2^I -> [0, r].
//
// The utility must be pure and safe to call concurrently. If the raw utility
// gives U(empty) != 0, that constant is subtracted from every evaluation.
// Every evaluation is checked against the declared range; values outside
// [0, r] raise RangeError instead of being clamped.
class Game {
 public:
  Game(std::size_t n_players, UtilityFn utility, double range_r,
       std::optional<std::vector<double>> known_values = std::nullopt);

  std::size_t n_players() const { return n_; }
  double range_r() const { return r_; }
  double u_total() const { return u_total_; }

  // Closed-form Shapley values when the constructor knows them.
  const std::optional<std::vector<double>>& known_values() const {
    return known_values_;
  }

  double operator()(const PlayerSubset& s) const;

  // Raw access without range validation; for building derived games.
  double Unchecked(const PlayerSubset& s) const { return (*utility_)(s) - offset_; }

 private:
  std::size_t n_;
  std::shared_ptr<const UtilityFn> utility_;
  double r_;
  double offset_ = 0.0;
  double u_total_ = 0.0;
  std::optional<std::vector<double>> known_values_;
};

enum class Method {
  kExactSubsets,
  kExactPermutations,
  kPermutation,
  kGroupTestFeasibility,
  kGroupTestBaseline,
  kCompressive,
  kKnn,
  kUniform,
  kLargestS,
};

std::string MethodName(Method m);
std::optional<Method> MethodFromName(const std::string& name);

struct ValueVector {
  std::vector<double> values;
  Method method = Method::kExactSubsets;
  std::optional<std::uint64_t> seed;
  std::uint64_t eval_count = 0;
  std::optional<double> epsilon;
  std::optional<double> delta;
  // False when the estimator's guarantee could not be certified for this
  // run (e.g. feasibility slack too large, non-monotone game).
  bool certified = true;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double Sum() const;
};

inline constexpr std::size_t kDefaultSubsetLimit = 25;
inline constexpr std::size_t kDefaultPermutationLimit = 10;

// s_i = sum over S in I\{i} of [U(S+i) - U(S)] / (N C(N-1,|S|)).
// Every subset is evaluated exactly once.
ValueVector ExactShapleySubsets(const Game& game,
                                std::size_t max_players = kDefaultSubsetLimit);

// s_i = (1/N!) sum over permutations of the marginal contribution of i.
ValueVector ExactShapleyPermutations(
    const Game& game, std::size_t max_players = kDefaultPermutationLimit);

// s_i - s_j from the pairwise-difference identity, without computing either
// value.
double ExactShapleyDifference(const Game& game, Player i, Player j,
                              std::size_t max_players = kDefaultSubsetLimit);

// ln C(n, k); exact for small n, lgamma above.
double LogBinomial(std::size_t n, std::size_t k);
double Binomial(std::size_t n, std::size_t k);

// Synthetic games.

// U(S) = sum of weights in S. Shapley value = weights.
Game MakeAdditiveGame(std::vector<double> weights);

// U(S) = total * (|S|/n)^exponent. Shapley value = total / n for everyone.
Game MakeSymmetricGame(std::size_t n, double total, double exponent = 1.0);

// Players [0, n_left) hold left gloves, the rest right gloves;
// U(S) = number of matched pairs in S. The default is the 3-player game with
// Shapley value (2/3, 1/6, 1/6).
Game MakeGloveGame(std::size_t n_left = 1, std::size_t n_right = 2);

// Weighted majority game: U(S) = 1 iff the weight of S reaches the quota.
Game MakeVotingGame(std::vector<double> weights, double quota);

// Utility drawn i.i.d. uniform on [0, 1] for every nonempty subset, from a
// seeded table. n <= 20.
Game MakeRandomGame(std::size_t n, std::uint64_t seed);

// U + V, with range r_U + r_V.
Game SumGame(const Game& u, const Game& v);

// c * U for c > 0, with range c * r_U.
Game ScaleGame(const Game& u, double c);

// Leave-one-out marginals U(I) - U(I \ {i}).
std::vector<double> LeaveOneOutMarginals(const Game& game);

}  // namespace shapval

#endif  // SHAPVAL_GAME_HPP_
