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

#include "shapval/game.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "shapval/error.hpp"
#include "shapval/parallel.hpp"
#include "shapval/rng.hpp"

namespace shapval {

// ---------------------------------------------------------------------------
// PlayerSubset

PlayerSubset::PlayerSubset(std::size_t n_players)
    : n_(n_players), words_((n_players + 63) / 64, 0) {}

PlayerSubset PlayerSubset::FromMask(std::size_t n_players, std::uint64_t mask) {
  PlayerSubset s(n_players);
  if (!s.words_.empty()) {
    s.words_[0] = n_players >= 64 ? mask : mask & ((1ULL << n_players) - 1);
  }
  return s;
}

PlayerSubset PlayerSubset::Full(std::size_t n_players) {
  PlayerSubset s(n_players);
  for (Player p = 0; p < n_players; ++p) s.Insert(p);
  return s;
}

PlayerSubset PlayerSubset::FromMembers(std::size_t n_players,
                                       std::span<const Player> members) {
  PlayerSubset s(n_players);
  for (Player p : members) {
    if (p >= n_players) throw ArgumentError("player index out of range");
    s.Insert(p);
  }
  return s;
}

std::size_t PlayerSubset::Count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

std::vector<Player> PlayerSubset::Members() const {
  std::vector<Player> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits != 0) {
      out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
      bits &= bits - 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Game

Game::Game(std::size_t n_players, UtilityFn utility, double range_r,
           std::optional<std::vector<double>> known_values)
    : n_(n_players),
      utility_(std::make_shared<const UtilityFn>(std::move(utility))),
      r_(range_r),
      known_values_(std::move(known_values)) {
  if (n_ == 0) throw ArgumentError("game needs at least one player");
  if (!(r_ > 0.0) || !std::isfinite(r_)) {
    throw ArgumentError("utility range r must be positive and finite");
  }
  if (!*utility_) throw ArgumentError("utility function is empty");
  if (known_values_ && known_values_->size() != n_) {
    throw ArgumentError("known values length differs from player count");
  }
  offset_ = (*utility_)(PlayerSubset(n_));
  if (!std::isfinite(offset_)) throw RangeError("U(empty) is not finite");
  u_total_ = (*this)(PlayerSubset::Full(n_));
}

double Game::operator()(const PlayerSubset& s) const {
  const double v = (*utility_)(s) - offset_;
  const double slack = 1e-12 * std::max(1.0, r_);
  if (!(v >= -slack && v <= r_ + slack)) {
    std::ostringstream msg;
    msg << "utility " << v << " outside declared range [0, " << r_ << "]";
    throw RangeError(msg.str());
  }
  return v;
}

double ValueVector::Sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

std::string MethodName(Method m) {
  switch (m) {
    case Method::kExactSubsets: return "exact";
    case Method::kExactPermutations: return "exact-permutations";
    case Method::kPermutation: return "perm";
    case Method::kGroupTestFeasibility: return "group-test";
    case Method::kGroupTestBaseline: return "group-test-baseline";
    case Method::kCompressive: return "compressive";
    case Method::kKnn: return "knn";
    case Method::kUniform: return "uniform";
    case Method::kLargestS: return "loo-influence";
  }
  return "unknown";
}

std::optional<Method> MethodFromName(const std::string& name) {
  for (Method m : {Method::kExactSubsets, Method::kExactPermutations,
                   Method::kPermutation, Method::kGroupTestFeasibility,
                   Method::kGroupTestBaseline, Method::kCompressive,
                   Method::kKnn, Method::kUniform, Method::kLargestS}) {
    if (MethodName(m) == name) return m;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Combinatorics

double LogBinomial(std::size_t n, std::size_t k) {
  if (k > n) return -INFINITY;
  if (n <= 20) return std::log(Binomial(n, k));
  return std::lgamma(static_cast<double>(n) + 1) -
         std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

double Binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  if (n > 20) return std::exp(LogBinomial(n, k));
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return static_cast<double>(c);
}

// ---------------------------------------------------------------------------
// Exact oracles

namespace {

void CheckGuard(const Game& game, std::size_t limit, const char* what) {
  if (game.n_players() > limit) {
    std::ostringstream msg;
    msg << what << " enumeration limited to " << limit << " players, game has "
        << game.n_players();
    throw SizeGuardError(msg.str());
  }
  if (game.n_players() > 62) throw SizeGuardError("bit-mask enumeration needs N <= 62");
}

constexpr std::size_t kMaskChunk = 1 << 12;

}  // namespace

ValueVector ExactShapleySubsets(const Game& game, std::size_t max_players) {
  CheckGuard(game, max_players, "subset");
  const std::size_t n = game.n_players();
  const std::uint64_t n_masks = 1ULL << n;

  // weight[k] = 1 / (N C(N-1, k)) for a size-k coalition not containing i.
  std::vector<double> weight(n);
  for (std::size_t k = 0; k < n; ++k) {
    weight[k] = std::exp(-std::log(static_cast<double>(n)) - LogBinomial(n - 1, k));
  }

  // Every subset is evaluated once into a table (2^N doubles), then each
  // player sums weighted differences, so a null player gets exactly 0.
  std::vector<double> table(n_masks, 0.0);
  const std::size_t n_chunks = ChunkCount(n_masks, kMaskChunk);
  ParallelForChunks(n_chunks, [&](std::size_t c) {
    const std::uint64_t begin = std::max<std::uint64_t>(c * kMaskChunk, 1);
    const std::uint64_t end = std::min<std::uint64_t>(n_masks, (c + 1) * kMaskChunk);
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      table[mask] = game(PlayerSubset::FromMask(n, mask));
    }
  });

  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(n, 0.0));
  ParallelForChunks(n_chunks, [&](std::size_t c) {
    auto& acc = partial[c];
    const std::uint64_t begin = c * kMaskChunk;
    const std::uint64_t end = std::min<std::uint64_t>(n_masks, begin + kMaskChunk);
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      const double w = weight[std::min<std::size_t>(std::popcount(mask), n - 1)];
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = 1ULL << i;
        if (mask & bit) continue;
        acc[i] += w * (table[mask | bit] - table[mask]);
      }
    }
  });

  ValueVector out;
  out.method = Method::kExactSubsets;
  out.values.assign(n, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] += acc[i];
  }
  out.eval_count = n_masks - 1;
  return out;
}

ValueVector ExactShapleyPermutations(const Game& game, std::size_t max_players) {
  CheckGuard(game, max_players, "permutation");
  const std::size_t n = game.n_players();

  // One chunk per leading player; each enumerates the (N-1)! orders of the
  // rest in lexicographic order.
  std::vector<std::vector<double>> partial(n, std::vector<double>(n, 0.0));
  std::vector<std::uint64_t> evals(n, 0);
  ParallelForChunks(n, [&](std::size_t first) {
    std::vector<Player> rest;
    for (Player p = 0; p < n; ++p) {
      if (p != first) rest.push_back(p);
    }
    auto& acc = partial[first];
    do {
      PlayerSubset prefix(n);
      double prev = 0.0;
      auto visit = [&](Player p) {
        prefix.Insert(p);
        const double u = game(prefix);
        acc[p] += u - prev;
        prev = u;
        ++evals[first];
      };
      visit(first);
      for (Player p : rest) visit(p);
    } while (std::next_permutation(rest.begin(), rest.end()));
  });

  double n_fact = 1.0;
  for (std::size_t k = 2; k <= n; ++k) n_fact *= static_cast<double>(k);

  ValueVector out;
  out.method = Method::kExactPermutations;
  out.values.assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] += partial[c][i];
    out.eval_count += evals[c];
  }
  for (auto& v : out.values) v /= n_fact;
  return out;
}

double ExactShapleyDifference(const Game& game, Player i, Player j,
                              std::size_t max_players) {
  const std::size_t n = game.n_players();
  if (i >= n || j >= n) throw ArgumentError("player index out of range");
  if (i == j) throw ArgumentError("difference needs two distinct players");
  CheckGuard(game, max_players, "subset");

  std::vector<Player> others;
  for (Player p = 0; p < n; ++p) {
    if (p != i && p != j) others.push_back(p);
  }
  const std::size_t m = others.size();
  std::vector<double> weight(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    weight[k] = std::exp(-std::log(static_cast<double>(n - 1)) - LogBinomial(m, k));
  }

  const std::uint64_t n_masks = 1ULL << m;
  const std::size_t n_chunks = ChunkCount(n_masks, kMaskChunk);
  std::vector<double> partial(n_chunks, 0.0);
  ParallelForChunks(n_chunks, [&](std::size_t c) {
    const std::uint64_t begin = c * kMaskChunk;
    const std::uint64_t end = std::min<std::uint64_t>(n_masks, begin + kMaskChunk);
    double acc = 0.0;
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      PlayerSubset s(n);
      for (std::size_t b = 0; b < m; ++b) {
        if ((mask >> b) & 1ULL) s.Insert(others[b]);
      }
      PlayerSubset with_i = s;
      with_i.Insert(i);
      PlayerSubset with_j = s;
      with_j.Insert(j);
      acc += weight[static_cast<std::size_t>(std::popcount(mask))] *
             (game(with_i) - game(with_j));
    }
    partial[c] = acc;
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Synthetic games

Game MakeAdditiveGame(std::vector<double> weights) {
  if (weights.empty()) throw ArgumentError("additive game needs weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ArgumentError("additive game weights must be nonnegative");
    }
    total += w;
  }
  const std::size_t n = weights.size();
  auto utility = [weights](const PlayerSubset& s) {
    double u = 0.0;
    for (Player p : s.Members()) u += weights[p];
    return u;
  };
  return Game(n, utility, total > 0.0 ? total : 1.0, weights);
}

Game MakeSymmetricGame(std::size_t n, double total, double exponent) {
  if (n == 0) throw ArgumentError("symmetric game needs players");
  if (!(total > 0.0) || !(exponent > 0.0)) {
    throw ArgumentError("symmetric game needs positive total and exponent");
  }
  auto utility = [n, total, exponent](const PlayerSubset& s) {
    const double frac = static_cast<double>(s.Count()) / static_cast<double>(n);
    return total * std::pow(frac, exponent);
  };
  return Game(n, utility, total,
              std::vector<double>(n, total / static_cast<double>(n)));
}

Game MakeGloveGame(std::size_t n_left, std::size_t n_right) {
  if (n_left == 0 || n_right == 0) {
    throw ArgumentError("glove game needs at least one left and one right glove");
  }
  const std::size_t n = n_left + n_right;
  auto utility = [n_left](const PlayerSubset& s) {
    std::size_t left = 0;
    std::size_t right = 0;
    for (Player p : s.Members()) (p < n_left ? left : right)++;
    return static_cast<double>(std::min(left, right));
  };
  return Game(n, utility, static_cast<double>(std::min(n_left, n_right)));
}

Game MakeVotingGame(std::vector<double> weights, double quota) {
  if (weights.empty()) throw ArgumentError("voting game needs weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ArgumentError("voting weights must be nonnegative");
    }
    total += w;
  }
  if (!(quota > 0.0) || quota > total) {
    throw ArgumentError("voting quota must lie in (0, sum of weights]");
  }
  const std::size_t n = weights.size();
  auto utility = [weights, quota](const PlayerSubset& s) {
    double w = 0.0;
    for (Player p : s.Members()) w += weights[p];
    return w >= quota ? 1.0 : 0.0;
  };
  return Game(n, utility, 1.0);
}

Game MakeRandomGame(std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > 20) throw ArgumentError("random game supports 1 <= n <= 20");
  auto table = std::make_shared<std::vector<double>>(std::size_t{1} << n, 0.0);
  RngStream rng(seed, StreamTag::kRandomGame, n);
  for (std::size_t mask = 1; mask < table->size(); ++mask) {
    (*table)[mask] = rng.NextDouble();
  }
  auto utility = [table](const PlayerSubset& s) {
    return (*table)[static_cast<std::size_t>(s.LowMask())];
  };
  return Game(n, utility, 1.0);
}

Game SumGame(const Game& u, const Game& v) {
  if (u.n_players() != v.n_players()) {
    throw ArgumentError("summed games must have the same player count");
  }
  std::optional<std::vector<double>> known;
  if (u.known_values() && v.known_values()) {
    known = *u.known_values();
    for (std::size_t i = 0; i < known->size(); ++i) (*known)[i] += (*v.known_values())[i];
  }
  auto utility = [u, v](const PlayerSubset& s) { return u(s) + v(s); };
  return Game(u.n_players(), utility, u.range_r() + v.range_r(), known);
}

Game ScaleGame(const Game& u, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ArgumentError("scale must be positive");
  std::optional<std::vector<double>> known = u.known_values();
  if (known) {
    for (auto& x : *known) x *= c;
  }
  auto utility = [u, c](const PlayerSubset& s) { return c * u(s); };
  return Game(u.n_players(), utility, c * u.range_r(), known);
}

std::vector<double> LeaveOneOutMarginals(const Game& game) {
  const std::size_t n = game.n_players();
  std::vector<double> out(n);
  const PlayerSubset full = PlayerSubset::Full(n);
  for (Player i = 0; i < n; ++i) {
    PlayerSubset without = full;
    without.Erase(i);
    out[i] = game.u_total() - game(without);
  }
  return out;
}

}  // namespace shapval
