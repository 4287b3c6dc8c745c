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

#include "shapval/group_testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shapval/error.hpp"
#include "shapval/parallel.hpp"
#include "shapval/rng.hpp"

namespace shapval {
namespace {

constexpr std::size_t kTestChunk = 256;

void CheckEpsilonDelta(double epsilon, double delta, double r) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  if (!(r > 0.0) || !std::isfinite(r)) throw ArgumentError("range r must be positive");
}

std::uint64_t CeilCount(double t) {
  if (!std::isfinite(t) || t > 1.8e19) {
    throw NumericalError("sample-size bound is not representable");
  }
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t)));
}

}  // namespace

GroupTestPlan BuildPlan(std::size_t n) {
  if (n < 2) throw ArgumentError("group testing needs at least two players");
  GroupTestPlan plan;
  plan.n_players = n;
  double harmonic = 0.0;
  for (std::size_t k = n - 1; k >= 1; --k) harmonic += 1.0 / static_cast<double>(k);
  plan.z_norm = 2.0 * harmonic;

  const double nd = static_cast<double>(n);
  plan.q.resize(n - 1);
  plan.q_cdf.resize(n - 1);
  double cum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double kd = static_cast<double>(k);
    plan.q[k - 1] = (1.0 / kd + 1.0 / (nd - kd)) / plan.z_norm;
    cum += plan.q[k - 1];
    plan.q_cdf[k - 1] = cum;
  }
  plan.q_cdf.back() = 1.0;
  plan.q_tot = QTotFromSum(plan);
  return plan;
}

double QTotFromSum(const GroupTestPlan& plan) {
  const std::size_t n = plan.n_players;
  const double nd = static_cast<double>(n);
  double q_tot = (nd - 2.0) / nd * plan.QAt(1);
  for (std::size_t k = 2; k < n; ++k) {
    const double kd = static_cast<double>(k);
    q_tot += plan.QAt(k) * (1.0 + 2.0 * kd * (kd - nd) / (nd * (nd - 1.0)));
  }
  return q_tot;
}

double BennettH(double u) { return (1.0 + u) * std::log1p(u) - u; }

std::uint64_t RequiredTests(std::size_t n, double epsilon, double delta, double r) {
  CheckEpsilonDelta(epsilon, delta, r);
  const GroupTestPlan plan = BuildPlan(n);
  const double nd = static_cast<double>(n);
  const double spread = 1.0 - plan.q_tot * plan.q_tot;
  const double u = epsilon / (plan.z_norm * r * std::sqrt(nd) * spread);
  const double t = 8.0 * std::log(nd * (nd - 1.0) / (2.0 * delta)) / (spread * BennettH(u));
  return CeilCount(t);
}

// ---------------------------------------------------------------------------

DifferenceMatrix DifferenceMatrix::FromUpper(
    std::size_t n, const std::function<double(std::size_t, std::size_t)>& upper) {
  DifferenceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = upper(i, j);
      m.at(i, j) = v;
      m.at(j, i) = -v;
    }
  }
  return m;
}

bool DifferenceMatrix::IsAntisymmetric() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if ((*this)(i, i) != 0.0) return false;
    for (std::size_t j = i + 1; j < n_; ++j) {
      if ((*this)(i, j) != -(*this)(j, i)) return false;
    }
  }
  return true;
}

GroupTestRun RunTests(const Game& game, const GroupTestPlan& plan, std::uint64_t t,
                      std::uint64_t seed, bool keep_records) {
  if (t == 0) throw ArgumentError("number of tests must be at least 1");
  const std::size_t n = game.n_players();
  if (plan.n_players != n) throw ArgumentError("plan size differs from game size");

  // Per player: sum over tests of u_t * beta_ti. Then
  // dU_ij = (Z/T) (sum_t u_t beta_ti - sum_t u_t beta_tj).
  const std::size_t n_chunks = ChunkCount(t, kTestChunk);
  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(n, 0.0));
  std::vector<TestRecord> records(keep_records ? t : 0);

  ParallelForChunks(n_chunks, [&](std::size_t c) {
    std::vector<Player> players(n);
    auto& acc = partial[c];
    const std::uint64_t begin = c * kTestChunk;
    const std::uint64_t end = std::min<std::uint64_t>(t, begin + kTestChunk);
    for (std::uint64_t test = begin; test < end; ++test) {
      RngStream rng(seed, StreamTag::kGroupTest, test);
      const double draw = rng.NextDouble();
      const auto it = std::upper_bound(plan.q_cdf.begin(), plan.q_cdf.end(), draw);
      const std::size_t k = static_cast<std::size_t>(it - plan.q_cdf.begin()) + 1;

      std::iota(players.begin(), players.end(), Player{0});
      rng.PartialShuffle(std::span<Player>(players), k);
      const auto chosen = std::span<const Player>(players.data(), k);
      PlayerSubset active = PlayerSubset::FromMembers(n, chosen);
      const double u = game(active);
      for (Player p : chosen) acc[p] += u;
      if (keep_records) records[test] = TestRecord{std::move(active), u};
    }
  });

  std::vector<double> weighted(n, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < n; ++i) weighted[i] += acc[i];
  }
  const double scale = plan.z_norm / static_cast<double>(t);

  GroupTestRun run;
  run.records = std::move(records);
  run.delta_u = DifferenceMatrix::FromUpper(
      n, [&](std::size_t i, std::size_t j) { return scale * (weighted[i] - weighted[j]); });
  run.eval_count = t;
  return run;
}

// ---------------------------------------------------------------------------
// Feasibility recovery

namespace {

struct Violation {
  double value = 0.0;
  std::vector<double> direction;  // averaged subgradient over maximal pairs
};

Violation MaxViolation(const DifferenceMatrix& d, const std::vector<double>& s,
                       bool want_direction) {
  const std::size_t n = s.size();
  Violation v;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      v.value = std::max(v.value, std::abs(s[i] - s[j] - d(i, j)));
    }
  }
  if (!want_direction) return v;

  v.direction.assign(n, 0.0);
  const double cutoff = v.value * (1.0 - 1e-12);
  std::size_t active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double e = s[i] - s[j] - d(i, j);
      if (std::abs(e) >= cutoff && v.value > 0.0) {
        const double sign = e > 0.0 ? 1.0 : -1.0;
        v.direction[i] += sign;
        v.direction[j] -= sign;
        ++active;
      }
    }
  }
  if (active > 0) {
    for (auto& g : v.direction) g /= static_cast<double>(active);
  }
  return v;
}

}  // namespace

FeasibilityResult RecoverFeasibility(const DifferenceMatrix& delta_u, double u_total,
                                     double epsilon) {
  const std::size_t n = delta_u.size();
  if (n == 0) throw ArgumentError("empty difference matrix");
  if (!delta_u.IsAntisymmetric()) {
    throw ArgumentError("difference matrix must be antisymmetric with zero diagonal");
  }
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be nonnegative");
  const double nd = static_cast<double>(n);

  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += delta_u(i, j);
    s[i] = (u_total + row) / nd;
  }

  // Projected subgradient descent on max_{i<j} |s_i - s_j - dU_ij| within the
  // plane sum(s) = u_total. Subgradients are differences of unit vectors, so
  // steps stay in the plane. The step halves (restarting from the best point)
  // whenever a 100-iteration window improves the best value by < 1e-10.
  constexpr std::uint64_t kWindow = 100;
  constexpr std::uint64_t kMaxIterations = 200000;
  Violation current = MaxViolation(delta_u, s, true);
  std::vector<double> best = s;
  double best_value = current.value;
  double step = best_value;
  const double step_floor = 1e-14 * (1.0 + std::abs(u_total) + best_value);
  double window_start = best_value;
  std::uint64_t it = 0;

  while (best_value > 0.0 && step > step_floor && it < kMaxIterations) {
    double norm = 0.0;
    for (double g : current.direction) norm += g * g;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) s[i] -= step * current.direction[i] / norm;
    current = MaxViolation(delta_u, s, true);
    ++it;
    if (current.value < best_value) {
      best_value = current.value;
      best = s;
    }
    if (it % kWindow == 0) {
      if (window_start - best_value < 1e-10) {
        step *= 0.5;
        s = best;
        current = MaxViolation(delta_u, s, true);
      }
      window_start = best_value;
    }
  }

  // Re-impose the efficiency constraint against accumulated rounding.
  const double drift = (u_total - std::accumulate(best.begin(), best.end(), 0.0)) / nd;
  for (auto& v : best) v += drift;

  FeasibilityResult result;
  result.values.values = std::move(best);
  result.values.method = Method::kGroupTestFeasibility;
  result.values.epsilon = epsilon;
  result.max_violation = MaxViolation(delta_u, result.values.values, false).value;
  result.tolerance = epsilon / (2.0 * std::sqrt(nd));
  result.values.certified = result.max_violation <= result.tolerance;
  result.iterations = it;
  return result;
}

// ---------------------------------------------------------------------------
// Baseline-point recovery

std::uint64_t BaselineDifferenceTests(std::size_t n, double epsilon, double delta,
                                      double r, double c_eps, double c_delta) {
  CheckEpsilonDelta(epsilon, delta, r);
  if (!(c_eps > 1.0) || !(c_delta > 1.0)) {
    throw ArgumentError("split constants must exceed 1");
  }
  const GroupTestPlan plan = BuildPlan(n);
  const double spread = 1.0 - plan.q_tot * plan.q_tot;
  const double u = 2.0 * epsilon / (plan.z_norm * r * c_eps * spread);
  const double t = 4.0 * std::log(c_delta * static_cast<double>(n - 1) / (2.0 * delta)) /
                   (spread * BennettH(u));
  // The log term is negative for tiny N with generous delta; one test minimum.
  return t > 0.0 ? CeilCount(t) : 1;
}

std::uint64_t BaselinePointSamples(double epsilon, double delta, double r,
                                   double c_eps, double c_delta) {
  CheckEpsilonDelta(epsilon, delta, r);
  if (!(c_eps > 1.0) || !(c_delta > 1.0)) {
    throw ArgumentError("split constants must exceed 1");
  }
  const double ratio = c_eps / ((c_eps - 1.0) * epsilon);
  const double t = 4.0 * r * r * ratio * ratio *
                   std::log(2.0 * c_delta / ((c_delta - 1.0) * delta));
  return CeilCount(t);
}

std::vector<double> SplitGrid(std::size_t points) {
  if (points < 2) throw ArgumentError("split grid needs at least two points");
  // Exponent runs from -1/2 to 1 so that 99^e spans [99^-0.5, 99]; with 64
  // points the index 21 lands on e = 0, i.e. C = 2.
  std::vector<double> grid(points);
  const double last = static_cast<double>(points - 1);
  const double zero_at = last / 3.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double e = (static_cast<double>(k) - zero_at) / (last - zero_at);
    grid[k] = 1.0 + std::pow(99.0, e);
  }
  return grid;
}

BaselineSplit OptimizeSplitConstants(std::size_t n, double epsilon, double delta,
                                     double r) {
  CheckEpsilonDelta(epsilon, delta, r);
  const std::vector<double> grid = SplitGrid();
  BaselineSplit best;
  std::uint64_t best_total = std::numeric_limits<std::uint64_t>::max();
  for (double ce : grid) {
    for (double cd : grid) {
      const std::uint64_t m1 = BaselineDifferenceTests(n, epsilon, delta, r, ce, cd);
      const std::uint64_t m2 = BaselinePointSamples(epsilon, delta, r, ce, cd);
      if (m1 + m2 < best_total) {
        best_total = m1 + m2;
        best = BaselineSplit{ce, cd, m1, m2};
      }
    }
  }
  return best;
}

namespace {

// Marginal contribution of `player` to the set of its predecessors in a
// uniformly random permutation: uniform position, then a uniform subset of
// that size from the other players.
double SampleBaselineMarginal(const Game& game, Player player, std::uint64_t seed,
                              std::uint64_t t, std::uint64_t& evals) {
  const std::size_t n = game.n_players();
  RngStream rng(seed, StreamTag::kBaselinePoint, t);
  const auto k = static_cast<std::size_t>(rng.NextBelow(n));
  std::vector<Player> others;
  others.reserve(n - 1);
  for (Player p = 0; p < n; ++p) {
    if (p != player) others.push_back(p);
  }
  rng.PartialShuffle(std::span<Player>(others), k);
  PlayerSubset before = PlayerSubset::FromMembers(n, std::span<const Player>(others.data(), k));
  double u_before = 0.0;
  if (k > 0) {
    u_before = game(before);
    ++evals;
  }
  before.Insert(player);
  double u_after = game.u_total();
  if (k + 1 < n) {
    u_after = game(before);
    ++evals;
  }
  return u_after - u_before;
}

}  // namespace

ValueVector EstimateGroupTesting(const Game& game, const GroupTestOptions& options,
                                 std::uint64_t seed) {
  const std::size_t n = game.n_players();
  const double r = game.range_r();
  CheckEpsilonDelta(options.epsilon, options.delta, r);
  const GroupTestPlan plan = BuildPlan(n);

  if (options.recovery == Recovery::kFeasibility) {
    const std::uint64_t t =
        options.tests ? *options.tests : RequiredTests(n, options.epsilon, options.delta, r);
    const GroupTestRun run = RunTests(game, plan, t, seed);
    FeasibilityResult res = RecoverFeasibility(run.delta_u, game.u_total(), options.epsilon);
    ValueVector out = std::move(res.values);
    out.method = Method::kGroupTestFeasibility;
    out.seed = seed;
    out.epsilon = options.epsilon;
    out.delta = options.delta;
    out.eval_count = run.eval_count;
    return out;
  }

  const BaselineSplit split = OptimizeSplitConstants(n, options.epsilon, options.delta, r);
  const std::uint64_t m1 = options.tests ? *options.tests : split.m1;
  constexpr Player kBaseline = 0;

  std::uint64_t evals = 0;
  const std::size_t n_chunks = ChunkCount(split.m2, kTestChunk);
  std::vector<double> partial(n_chunks, 0.0);
  std::vector<std::uint64_t> chunk_evals(n_chunks, 0);
  ParallelForChunks(n_chunks, [&](std::size_t c) {
    const std::uint64_t begin = c * kTestChunk;
    const std::uint64_t end = std::min<std::uint64_t>(split.m2, begin + kTestChunk);
    for (std::uint64_t t = begin; t < end; ++t) {
      partial[c] += SampleBaselineMarginal(game, kBaseline, seed, t, chunk_evals[c]);
    }
  });
  double baseline_sum = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    baseline_sum += partial[c];
    evals += chunk_evals[c];
  }
  const double s_baseline = baseline_sum / static_cast<double>(split.m2);

  const GroupTestRun run = RunTests(game, plan, m1, seed);
  ValueVector out;
  out.method = Method::kGroupTestBaseline;
  out.seed = seed;
  out.epsilon = options.epsilon;
  out.delta = options.delta;
  out.values.resize(n);
  for (Player i = 0; i < n; ++i) {
    out.values[i] = i == kBaseline ? s_baseline : s_baseline + run.delta_u(i, kBaseline);
  }
  out.eval_count = evals + run.eval_count;
  return out;
}

}  // namespace shapval
