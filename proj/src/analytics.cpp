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

#include "shapval/analytics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "shapval/error.hpp"

namespace shapval {
namespace {

double Sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

// log(1 + exp(-m)) without overflow.
double LogLoss(double margin) {
  return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

void CheckGapArgs(double scale, std::size_t n) {
  if (n < 2) throw ArgumentError("value gap bound needs n >= 2");
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw ArgumentError("stability constant must be finite and nonnegative");
  }
}

}  // namespace

ValueVector UniformDivision(double u_total, std::size_t n) {
  if (n == 0) throw ArgumentError("uniform division needs n >= 1");
  ValueVector out;
  out.method = Method::kUniform;
  out.values.assign(n, u_total / static_cast<double>(n));
  return out;
}

double StabilityValueGapBound(double c_stab, std::size_t n) {
  CheckGapArgs(c_stab, n);
  return 2.0 * LambdaStableGapBound(c_stab, n);
}

double LambdaStableGapBound(double lambda, std::size_t n) {
  CheckGapArgs(lambda, n);
  const double m = static_cast<double>(n - 1);
  return lambda * (1.0 + std::log(m)) / m;
}

double EmpiricalStabilityLambda(const Game& game) {
  const std::size_t n = game.n_players();
  if (n < 2 || n > 16) throw SizeGuardError("stability enumeration needs 2 <= n <= 16");
  const std::uint64_t n_masks = 1ULL << n;
  std::vector<double> table(n_masks, 0.0);
  for (std::uint64_t mask = 1; mask < n_masks; ++mask) {
    table[mask] = game(PlayerSubset::FromMask(n, mask));
  }
  double lambda = 0.0;
  for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
    const double size_plus_one = static_cast<double>(std::popcount(mask) + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1ULL) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if ((mask >> j) & 1ULL) continue;
        const double gap = std::abs(table[mask | (1ULL << i)] - table[mask | (1ULL << j)]);
        lambda = std::max(lambda, size_plus_one * gap);
      }
    }
  }
  return lambda;
}

// ---------------------------------------------------------------------------
// Logistic regression

double LogisticLoss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& y) {
  if (x.rows() == 0) throw ArgumentError("empty data set");
  const Eigen::VectorXd margins = (x * theta).cwiseProduct(y);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) sum += LogLoss(margins(i));
  return sum / static_cast<double>(x.rows());
}

LogisticModel FitLogistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2,
                          std::optional<std::size_t> exclude) {
  if (x.rows() != y.size()) throw ArgumentError("feature and label counts differ");
  if (!(l2 >= 0.0)) throw ArgumentError("l2 penalty must be nonnegative");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 1.0 && y(i) != -1.0) throw ArgumentError("logistic labels must be -1 or +1");
  }
  const Eigen::Index d = x.cols();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!exclude || static_cast<std::size_t>(i) != *exclude) rows.push_back(i);
  }

  auto objective = [&](const Eigen::VectorXd& theta) {
    double f = 0.5 * l2 * theta.squaredNorm();
    for (Eigen::Index i : rows) f += LogLoss(y(i) * x.row(i).dot(theta));
    return f;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  double f = objective(theta);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd grad = l2 * theta;
    Eigen::MatrixXd hess = l2 * Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i : rows) {
      const double z = x.row(i).dot(theta);
      grad -= Sigmoid(-y(i) * z) * y(i) * x.row(i).transpose();
      hess += Sigmoid(z) * Sigmoid(-z) * x.row(i).transpose() * x.row(i);
    }
    if (grad.norm() < 1e-13 * (1.0 + static_cast<double>(rows.size()))) break;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-15)) {
      throw NumericalError("logistic Hessian is singular; use a positive l2 penalty");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    double f_new = objective(theta - step);
    while (f_new > f - 1e-4 * t * grad.dot(step) && t > 1e-12) {
      t *= 0.5;
      f_new = objective(theta - t * step);
    }
    theta -= t * step;
    if (f - f_new < 1e-16 * (1.0 + std::abs(f))) {
      f = f_new;
      break;
    }
    f = f_new;
  }

  LogisticModel model;
  model.theta = theta;
  model.x = x;
  model.y = y;
  model.l2 = l2;
  return model;
}

Eigen::MatrixXd LogisticHessian(const LogisticModel& model) {
  const Eigen::Index d = model.x.cols();
  Eigen::MatrixXd h = model.l2 * Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < model.x.rows(); ++i) {
    const double z = model.x.row(i).dot(model.theta);
    h += Sigmoid(z) * Sigmoid(-z) * model.x.row(i).transpose() * model.x.row(i);
  }
  return h;
}

InfluenceResult InfluenceRemovalLogistic(const LogisticModel& model, std::size_t index,
                                         std::optional<double> damping) {
  if (index >= static_cast<std::size_t>(model.x.rows())) {
    throw ArgumentError("training index out of range");
  }
  const auto row = static_cast<Eigen::Index>(index);
  const Eigen::Index d = model.x.cols();
  Eigen::MatrixXd h = LogisticHessian(model);
  const double lambda = damping ? *damping : 1e-6 * h.trace() / static_cast<double>(d);
  if (!(lambda >= 0.0)) throw ArgumentError("damping must be nonnegative");
  h += lambda * Eigen::MatrixXd::Identity(d, d);

  const Eigen::VectorXd xi = model.x.row(row).transpose();
  const double yi = model.y(row);
  // Gradient of the removed point's loss is -sigma(-y x^T theta) y x; the
  // removal step is +H^{-1} times that gradient.
  const Eigen::VectorXd g = -Sigmoid(-yi * xi.dot(model.theta)) * yi * xi;

  const Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("influence Hessian is not positive definite; set a positive damping");
  }
  InfluenceResult out;
  out.damping = lambda;
  out.delta = llt.solve(g);
  // One step of iterative refinement keeps the residual at rounding level.
  out.delta += llt.solve(g - h * out.delta);
  out.residual = (h * out.delta - g).norm();
  return out;
}

std::vector<double> InfluenceMarginals(const LogisticModel& model,
                                       const Eigen::MatrixXd& test_x,
                                       const Eigen::VectorXd& test_y,
                                       std::optional<double> damping) {
  const double base = LogisticLoss(model.theta, test_x, test_y);
  std::vector<double> out(static_cast<std::size_t>(model.x.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const InfluenceResult inf = InfluenceRemovalLogistic(model, i, damping);
    // U(I) - U(I\{i}) = L_test(theta without i) - L_test(theta).
    out[i] = LogisticLoss(model.theta + inf.delta, test_x, test_y) - base;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Largest-S heuristic

ValueVector LargestSValues(std::span<const double> marginals, double u_total) {
  if (marginals.empty()) throw ArgumentError("no marginals");
  const double total = std::accumulate(marginals.begin(), marginals.end(), 0.0);
  if (total == 0.0 || !std::isfinite(total)) {
    throw NumericalError("leave-one-out marginals sum to zero; cannot normalise");
  }
  const double c_u = u_total / total;
  ValueVector out;
  out.method = Method::kLargestS;
  out.values.resize(marginals.size());
  for (std::size_t i = 0; i < marginals.size(); ++i) out.values[i] = c_u * marginals[i];
  return out;
}

AdditivityReport AdditivityViolation(const Game& u, const Game& v) {
  if (u.n_players() != v.n_players()) throw ArgumentError("games differ in player count");
  const Game sum = SumGame(u, v);
  const std::vector<double> mu = LeaveOneOutMarginals(u);
  const std::vector<double> mv = LeaveOneOutMarginals(v);
  const std::vector<double> ms = LeaveOneOutMarginals(sum);
  const ValueVector su = LargestSValues(mu, u.u_total());
  const ValueVector sv = LargestSValues(mv, v.u_total());
  const ValueVector ss = LargestSValues(ms, sum.u_total());

  AdditivityReport report;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    report.violation = std::max(report.violation, std::abs(ss[i] - su[i] - sv[i]));
  }
  const double total_u = std::accumulate(mu.begin(), mu.end(), 0.0);
  const double total_v = std::accumulate(mv.begin(), mv.end(), 0.0);
  const double lhs = v.u_total() * total_u;
  const double rhs = u.u_total() * total_v;
  report.condition_holds =
      std::abs(lhs - rhs) <= 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return report;
}

}  // namespace shapval
