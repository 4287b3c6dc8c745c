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

// Compressive permutation sampling: random +-1/sqrt(M) projections of
// permutation marginals, followed by basis pursuit denoising on the deviation
// of the values from the uniform split U(I)/N.

#ifndef SHAPVAL_COMPRESSIVE_HPP_
#define SHAPVAL_COMPRESSIVE_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "shapval/game.hpp"

namespace shapval {

struct MeasurementMatrix {
  Eigen::MatrixXd entries;  // M x N, every entry +-1/sqrt(M)
  std::uint64_t seed = 0;

  std::size_t rows() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(entries.cols()); }
};

// I.i.d. equiprobable signs from the (seed, matrix) stream, scaled by 1/sqrt(M).
MeasurementMatrix SampleBernoulliMatrix(std::size_t m, std::size_t n, std::uint64_t seed);

struct CompressiveState {
  Eigen::VectorXd y_bar;            // (1/T) sum_t A phi^t
  double s_bar = 0.0;               // U(I) / N
  std::uint64_t t_permutations = 0;
  std::uint64_t eval_count = 0;
  double max_abs_measurement = 0.0; // max over m, t of |y_{m,t}|
  bool saw_negative_marginal = false;
};

CompressiveState CompressiveSample(const Game& game, const MeasurementMatrix& a,
                                   std::uint64_t t, std::uint64_t seed);

struct BpdnInfo {
  double residual_norm = 0.0;  // ||A x - b||_2
  double lambda = 0.0;         // penalty at which the path stopped
  std::size_t steps = 0;
};

// argmin ||x||_1 subject to ||A x - b||_2 <= epsilon.
//
// Follows the piecewise-linear solution path of
// min 1/2 ||A x - b||^2 + lambda ||x||_1 from lambda = ||A^T b||_inf down
// to 0 and stops at the first point where the residual constraint holds,
// which is the constrained optimum.
Eigen::VectorXd BpdnSolve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                          double epsilon, BpdnInfo* info = nullptr);

// ceil((2 r^2 / eps^2) ln(4M / delta)).
std::uint64_t RequiredTCompressive(double r, double epsilon, double delta,
                                   std::size_t m);

// s_hat = s_bar + argmin ||ds||_1 s.t. ||A (s_bar + ds) - y_bar||_2 <= epsilon.
// Marked uncertified when a negative marginal is observed, since the
// error guarantee needs a monotone utility.
ValueVector EstimateCompressive(const Game& game, std::size_t m, std::uint64_t t,
                                double epsilon, std::uint64_t seed);

// l1 error of the best k-term approximation: sum of the N-k smallest
// magnitudes.
double SigmaK(std::span<const double> values, std::size_t k);

}  // namespace shapval

#endif  // SHAPVAL_COMPRESSIVE_HPP_
