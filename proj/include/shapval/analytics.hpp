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

// Heuristic and bound-based valuation: uniform division under stability,
// and the leave-one-out ("largest-S") scheme with logistic-regression
// influence approximations.

#ifndef SHAPVAL_ANALYTICS_HPP_
#define SHAPVAL_ANALYTICS_HPP_

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "shapval/game.hpp"

namespace shapval {

ValueVector UniformDivision(double u_total, std::size_t n);

// 2 c_stab (1 + ln(n-1)) / (n-1): bound on s_i - s_j for a learner with
// uniform stability c_stab/|S| and test-loss utility.
double StabilityValueGapBound(double c_stab, std::size_t n);

// lambda (1 + ln(n-1)) / (n-1) for a lambda-stable utility.
double LambdaStableGapBound(double lambda, std::size_t n);

// Smallest lambda for which the game is lambda-stable:
// max over i != j, S in I\{i,j} of (|S|+1) |U(S+i) - U(S+j)|. Enumerates
// all subsets, so n <= 16.
double EmpiricalStabilityLambda(const Game& game);

// Logistic regression with labels in {-1, +1}, trained on
// sum_i log(1 + exp(-y_i x_i^T theta)) + (l2/2) ||theta||^2.
struct LogisticModel {
  Eigen::VectorXd theta;
  Eigen::MatrixXd x;  // N x d
  Eigen::VectorXd y;  // +-1
  double l2 = 0.0;
};

// Newton's method with backtracking. `exclude` drops one training row.
LogisticModel FitLogistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                          std::optional<std::size_t> exclude = std::nullopt);

// sum_i sigma(x_i^T theta) sigma(-x_i^T theta) x_i x_i^T + l2 I.
Eigen::MatrixXd LogisticHessian(const LogisticModel& model);

// Mean log-loss on a labelled set.
double LogisticLoss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& y);

struct InfluenceResult {
  Eigen::VectorXd delta;  // predicted theta_without_point - theta
  double residual = 0.0;  // ||H delta - g||_2 for the damped Hessian
  double damping = 0.0;
};

// Parameter change from removing training point `index`:
// -(H + damping I)^{-1} sigma(-y x^T theta) y x.
// The default damping is 1e-6 trace(H)/d; pass 0 to disable it, in which case
// a singular Hessian raises NumericalError.
InfluenceResult InfluenceRemovalLogistic(const LogisticModel& model, std::size_t index,
                                         std::optional<double> damping = std::nullopt);

// Leave-one-out marginals of U(S) = L_test(0) - L_test(theta_S), with each
// removal approximated by InfluenceRemovalLogistic instead of retraining.
std::vector<double> InfluenceMarginals(const LogisticModel& model,
                                       const Eigen::MatrixXd& test_x,
                                       const Eigen::VectorXd& test_y,
                                       std::optional<double> damping = std::nullopt);

// s_i = C_U marginals[i], C_U = u_total / sum(marginals).
ValueVector LargestSValues(std::span<const double> marginals, double u_total);

struct AdditivityReport {
  double violation = 0.0;       // max_i |s(U+V,i) - s(U,i) - s(V,i)|
  bool condition_holds = false; // V(I) sum m_U == U(I) sum m_V
};

// Largest-S values computed from exact leave-one-out marginals of each game.
AdditivityReport AdditivityViolation(const Game& u, const Game& v);

}  // namespace shapval

#endif  // SHAPVAL_ANALYTICS_HPP_
