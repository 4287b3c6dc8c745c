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

// Group-testing Shapley estimation.
//
// Each test draws a coalition size k ~ q(k) with q(k) proportional to
// 1/k + 1/(N-k), then a uniform k-subset, and records its utility. The
// scaled statistic Z u_t (beta_ti - beta_tj) is an unbiased estimate of
// s_i - s_j. Values are recovered from the estimated differences either by
// solving the feasibility problem under the efficiency constraint, or by
// anchoring every difference to a directly estimated baseline player.

#ifndef SHAPVAL_GROUP_TESTING_HPP_
#define SHAPVAL_GROUP_TESTING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "shapval/game.hpp"

namespace shapval {

struct GroupTestPlan {
  std::size_t n_players = 0;
  double z_norm = 0.0;          // Z = 2 sum_{k=1}^{N-1} 1/k
  std::vector<double> q;        // q[k-1] = q(k), k = 1..N-1
  std::vector<double> q_cdf;    // cumulative q, last entry exactly 1
  double q_tot = 0.0;           // probability-weighted zero-contribution term

  double QAt(std::size_t k) const { return q[k - 1]; }
};

GroupTestPlan BuildPlan(std::size_t n);

// q_tot by its defining sum over k. BuildPlan stores this value.
double QTotFromSum(const GroupTestPlan& plan);

// Closed form q_tot = 1 - 2/Z.
inline double QTotClosedForm(double z_norm) { return 1.0 - 2.0 / z_norm; }

// Bennett's h(u) = (1 + u) ln(1 + u) - u.
double BennettH(double u);

// Number of tests for an (epsilon, delta) guarantee in l2:
// ceil(8 ln(N(N-1)/(2 delta)) / ((1 - q_tot^2) h(eps / (Z r sqrt(N) (1 - q_tot^2))))).
std::uint64_t RequiredTests(std::size_t n, double epsilon, double delta, double r);

struct TestRecord {
  PlayerSubset activation;
  double utility = 0.0;
};

// Antisymmetric N x N matrix of estimated differences s_i - s_j.
class DifferenceMatrix {
 public:
  DifferenceMatrix() = default;
  explicit DifferenceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  // Fills (i, j) for i < j and mirrors it with the opposite sign.
  static DifferenceMatrix FromUpper(std::size_t n,
                                    const std::function<double(std::size_t, std::size_t)>& upper);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

  // Exact antisymmetry and zero diagonal.
  bool IsAntisymmetric() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct GroupTestRun {
  std::vector<TestRecord> records;  // empty unless requested
  DifferenceMatrix delta_u;
  std::uint64_t eval_count = 0;
};

// Executes t tests; test index t uses its own random stream so the result is
// independent of the thread count.
GroupTestRun RunTests(const Game& game, const GroupTestPlan& plan, std::uint64_t t,
                      std::uint64_t seed, bool keep_records = false);

struct FeasibilityResult {
  ValueVector values;
  double max_violation = 0.0;   // max_{i<j} |(s_i - s_j) - dU_ij| at the solution
  double tolerance = 0.0;       // eps / (2 sqrt(N))
  std::uint64_t iterations = 0;
};

// Minimises the largest pairwise violation subject to sum(s) = u_total,
// starting from the averaging solution s_i = (u_total + sum_j dU_ij) / N.
// The result is marked uncertified when the optimum exceeds eps/(2 sqrt(N)).
FeasibilityResult RecoverFeasibility(const DifferenceMatrix& delta_u, double u_total,
                                     double epsilon);

struct BaselineSplit {
  double c_eps = 2.0;
  double c_delta = 2.0;
  std::uint64_t m1 = 1;  // group tests for the N-1 differences
  std::uint64_t m2 = 1;  // sampled marginals for the baseline player
};

// M1 = ceil(4 ln(C_d (N-1) / (2 delta)) / ((1 - q_tot^2) h(2 eps / (Z r C_e (1 - q_tot^2))))).
std::uint64_t BaselineDifferenceTests(std::size_t n, double epsilon, double delta,
                                      double r, double c_eps, double c_delta);

// M2 = ceil((4 r^2 C_e^2 / ((C_e - 1)^2 eps^2)) ln(2 C_d / ((C_d - 1) delta))).
std::uint64_t BaselinePointSamples(double epsilon, double delta, double r,
                                   double c_eps, double c_delta);

// Grid values for C_eps and C_delta: 1 + 99^((k - 21) / 42), k = 0..63, i.e.
// log-spaced in (1, 100] and containing 2 exactly.
std::vector<double> SplitGrid(std::size_t points = 64);

// Minimises M1 + M2 over SplitGrid() x SplitGrid(); ties keep the first pair
// in row-major grid order.
BaselineSplit OptimizeSplitConstants(std::size_t n, double epsilon, double delta,
                                     double r);

enum class Recovery { kFeasibility, kBaseline };

struct GroupTestOptions {
  double epsilon = 0.1;
  double delta = 0.05;
  Recovery recovery = Recovery::kFeasibility;
  std::optional<std::uint64_t> tests;  // overrides the computed budget
};

ValueVector EstimateGroupTesting(const Game& game, const GroupTestOptions& options,
                                 std::uint64_t seed);

}  // namespace shapval

#endif  // SHAPVAL_GROUP_TESTING_HPP_
