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

#include "shapval/compressive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shapval/error.hpp"
#include "shapval/parallel.hpp"
#include "shapval/permutation.hpp"
#include "shapval/rng.hpp"

namespace shapval {
namespace {

constexpr std::size_t kPermutationChunk = 64;

}  // namespace

MeasurementMatrix SampleBernoulliMatrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || n == 0) throw ArgumentError("measurement matrix needs m, n >= 1");
  MeasurementMatrix a;
  a.seed = seed;
  a.entries.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const double mag = 1.0 / std::sqrt(static_cast<double>(m));
  RngStream rng(seed, StreamTag::kMeasurementMatrix, 0);
  for (std::size_t row = 0; row < m; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      a.entries(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
          rng.NextBit() ? mag : -mag;
    }
  }
  return a;
}

CompressiveState CompressiveSample(const Game& game, const MeasurementMatrix& a,
                                   std::uint64_t t, std::uint64_t seed) {
  const std::size_t n = game.n_players();
  if (a.cols() != n) throw ArgumentError("measurement matrix width differs from player count");
  if (t == 0) throw ArgumentError("number of permutations must be at least 1");
  const auto m = static_cast<Eigen::Index>(a.rows());

  struct Partial {
    Eigen::VectorXd y_sum;
    double max_abs = 0.0;
    bool negative = false;
  };
  const std::size_t n_chunks = ChunkCount(t, kPermutationChunk);
  std::vector<Partial> partial(n_chunks);
  ParallelForChunks(n_chunks, [&](std::size_t c) {
    Partial& p = partial[c];
    p.y_sum = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd phi(static_cast<Eigen::Index>(n));
    const std::uint64_t begin = c * kPermutationChunk;
    const std::uint64_t end = std::min<std::uint64_t>(t, begin + kPermutationChunk);
    for (std::uint64_t k = begin; k < end; ++k) {
      PermutationMarginals(game, seed, StreamTag::kCompressivePermutation, k,
                           std::span<double>(phi.data(), n));
      const Eigen::VectorXd y = a.entries * phi;
      p.y_sum += y;
      p.max_abs = std::max(p.max_abs, y.cwiseAbs().maxCoeff());
      // Allow rounding noise from prefix differences.
      if (phi.minCoeff() < -1e-12 * game.range_r()) p.negative = true;
    }
  });

  CompressiveState state;
  state.y_bar = Eigen::VectorXd::Zero(m);
  for (const auto& p : partial) {
    state.y_bar += p.y_sum;
    state.max_abs_measurement = std::max(state.max_abs_measurement, p.max_abs);
    state.saw_negative_marginal = state.saw_negative_marginal || p.negative;
  }
  state.y_bar /= static_cast<double>(t);
  state.s_bar = game.u_total() / static_cast<double>(n);
  state.t_permutations = t;
  state.eval_count = t * n;
  return state;
}

Eigen::VectorXd BpdnSolve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                          double epsilon, BpdnInfo* info) {
  if (!(epsilon >= 0.0)) throw ArgumentError("BPDN tolerance must be nonnegative");
  if (a.rows() != b.size()) throw ArgumentError("BPDN dimension mismatch");
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  BpdnInfo local;
  BpdnInfo& out = info ? *info : local;
  out = BpdnInfo{};

  Eigen::VectorXd residual = b;
  out.residual_norm = residual.norm();
  if (out.residual_norm <= epsilon || n == 0) return x;
  // Residuals at rounding level count as zero.
  const double target = std::max(epsilon, 1e-13 * out.residual_norm);

  Eigen::VectorXd corr = a.transpose() * residual;
  Eigen::Index first = 0;
  double lambda = corr.cwiseAbs().maxCoeff(&first);
  const double lambda_max = lambda;
  if (lambda == 0.0) {
    // b is orthogonal to the range of A; nothing reduces the residual.
    return x;
  }

  std::vector<Eigen::Index> active{first};
  std::vector<double> signs{corr(first) > 0 ? 1.0 : -1.0};
  std::vector<bool> is_active(static_cast<std::size_t>(n), false);
  is_active[static_cast<std::size_t>(first)] = true;
  const std::size_t max_steps = 20 * static_cast<std::size_t>(n) + 100;
  constexpr double kTiny = 1e-14;
  // Variables barred from re-entering at a zero step: ones that just left,
  // or just entered with a direction against their sign. Cleared once the
  // path makes real progress.
  std::vector<bool> blocked(static_cast<std::size_t>(n), false);

  for (std::size_t step = 0; step < max_steps; ++step) {
    out.steps = step + 1;
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd a_act(a.rows(), k);
    Eigen::VectorXd s_act(k);
    for (Eigen::Index c = 0; c < k; ++c) {
      a_act.col(c) = a.col(active[static_cast<std::size_t>(c)]);
      s_act(c) = signs[static_cast<std::size_t>(c)];
    }
    const Eigen::MatrixXd gram = a_act.transpose() * a_act;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericalError("BPDN active set is singular");
    const Eigen::VectorXd d = ldlt.solve(s_act);
    bool dropped = false;
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::Index j = active[static_cast<std::size_t>(c)];
      if (x(j) == 0.0 && d(c) * s_act(c) < 0.0 && k > 1) {
        blocked[static_cast<std::size_t>(j)] = true;
        is_active[static_cast<std::size_t>(j)] = false;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(c));
        signs.erase(signs.begin() + static_cast<std::ptrdiff_t>(c));
        dropped = true;
        break;
      }
    }
    if (dropped) continue;
    const Eigen::VectorXd v = a_act * d;        // residual moves by -gamma v
    const Eigen::VectorXd slope = a.transpose() * v;

    // Largest admissible step before the active set changes.
    double gamma = lambda;
    Eigen::Index enter = -1;
    Eigen::Index leave = -1;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double xc = x(active[static_cast<std::size_t>(c)]);
      if (d(c) == 0.0) continue;
      const double g = -xc / d(c);
      if (g > kTiny * lambda && g < gamma) {
        gamma = g;
        leave = c;
      }
    }

    std::vector<std::pair<double, Eigen::Index>> candidates;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      // Ties leave a variable on the boundary already; it enters now if its
      // correlation is moving outward.
      const double sgn = corr(j) >= 0.0 ? 1.0 : -1.0;
      const bool barred = blocked[static_cast<std::size_t>(j)];
      if (!barred && lambda - std::abs(corr(j)) <= 1e-12 * lambda &&
          1.0 - sgn * slope(j) > 1e-9) {
        candidates.emplace_back(0.0, j);
        continue;
      }
      // A variable that just left sits on the boundary; only a genuine
      // crossing further along the segment may bring it back.
      const double floor = (barred ? 1e-9 : kTiny) * lambda;
      double best = gamma;
      for (double g : {(lambda - corr(j)) / (1.0 - slope(j)),
                       (lambda + corr(j)) / (1.0 + slope(j))}) {
        if (g > floor && g < best) best = g;
      }
      if (best < gamma) candidates.emplace_back(best, j);
    }
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [g, j] : candidates) {
      // Columns in the span of the active set stay tied with it and would
      // make the Gram matrix singular.
      const Eigen::VectorXd coef = ldlt.solve(a_act.transpose() * a.col(j));
      if ((a.col(j) - a_act * coef).norm() <= 1e-9 * a.col(j).norm()) continue;
      gamma = g;
      enter = j;
      leave = -1;
      break;
    }

    // Does the residual constraint become active inside this segment?
    // ||r - gamma v||^2 = ||r||^2 - 2 gamma r.v + gamma^2 ||v||^2.
    const double rr = residual.squaredNorm();
    const double rv = residual.dot(v);
    const double vv = v.squaredNorm();
    const double end_sq = rr - 2.0 * gamma * rv + gamma * gamma * vv;
    const bool path_end = (enter < 0 && leave < 0) || lambda - gamma <= 1e-14 * lambda_max;
    if (end_sq <= target * target || path_end) {
      double g = gamma;
      if (end_sq <= target * target && vv > 0.0) {
        const double disc = std::max(0.0, rv * rv - vv * (rr - target * target));
        g = std::clamp((rv - std::sqrt(disc)) / vv, 0.0, gamma);
      }
      for (Eigen::Index c = 0; c < k; ++c) x(active[static_cast<std::size_t>(c)]) += g * d(c);
      residual = b - a * x;
      out.residual_norm = residual.norm();
      out.lambda = lambda - g;
      return x;
    }

    for (Eigen::Index c = 0; c < k; ++c) x(active[static_cast<std::size_t>(c)]) += gamma * d(c);
    lambda -= gamma;
    residual = b - a * x;
    corr = a.transpose() * residual;
    if (gamma > 1e-9 * (lambda + gamma)) std::fill(blocked.begin(), blocked.end(), false);

    if (leave >= 0) {
      const auto idx = static_cast<std::size_t>(leave);
      const Eigen::Index j = active[idx];
      x(j) = 0.0;
      is_active[static_cast<std::size_t>(j)] = false;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(idx));
      signs.erase(signs.begin() + static_cast<std::ptrdiff_t>(idx));
      blocked[static_cast<std::size_t>(j)] = true;
      residual = b - a * x;
      corr = a.transpose() * residual;
    } else if (enter >= 0) {
      active.push_back(enter);
      signs.push_back(corr(enter) > 0 ? 1.0 : -1.0);
      is_active[static_cast<std::size_t>(enter)] = true;
    }
  }
  throw NumericalError("BPDN homotopy did not terminate");
}

std::uint64_t RequiredTCompressive(double r, double epsilon, double delta, std::size_t m) {
  if (!(r > 0.0) || !(epsilon > 0.0)) throw ArgumentError("r and epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  if (m == 0) throw ArgumentError("m must be at least 1");
  const double t = 2.0 * r * r / (epsilon * epsilon) *
                   std::log(4.0 * static_cast<double>(m) / delta);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t)));
}

ValueVector EstimateCompressive(const Game& game, std::size_t m, std::uint64_t t,
                                double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be nonnegative");
  const std::size_t n = game.n_players();
  const MeasurementMatrix a = SampleBernoulliMatrix(m, n, seed);
  const CompressiveState state = CompressiveSample(game, a, t, seed);

  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), state.s_bar);
  const Eigen::VectorXd target = state.y_bar - a.entries * uniform;
  const Eigen::VectorXd ds = BpdnSolve(a.entries, target, epsilon);

  ValueVector out;
  out.method = Method::kCompressive;
  out.seed = seed;
  out.epsilon = epsilon;
  out.eval_count = state.eval_count;
  out.certified = !state.saw_negative_marginal;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = state.s_bar + ds(static_cast<Eigen::Index>(i));
  return out;
}

double SigmaK(std::span<const double> values, std::size_t k) {
  if (k > values.size()) throw ArgumentError("k exceeds vector length");
  std::vector<double> mags(values.size());
  std::transform(values.begin(), values.end(), mags.begin(),
                 [](double v) { return std::abs(v); });
  std::sort(mags.begin(), mags.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + k < mags.size(); ++i) sum += mags[i];
  return sum;
}

}  // namespace shapval
