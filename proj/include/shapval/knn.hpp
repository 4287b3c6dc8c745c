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

// Exact Shapley values for the unweighted K-nearest-neighbour utility.

#ifndef SHAPVAL_KNN_HPP_
#define SHAPVAL_KNN_HPP_

#include <span>
#include <string>
#include <vector>

#include "shapval/game.hpp"

namespace shapval {

struct LabeledPoint {
  std::vector<double> features;
  std::string label;
};

enum class DistanceMetric { kEuclidean, kManhattan };

// One test point against a training set, with the training points ranked by
// distance. Ties are broken by ascending original index.
class KnnInstance {
 public:
  KnnInstance(std::vector<LabeledPoint> training, LabeledPoint test_point,
              std::size_t k_neighbors,
              DistanceMetric metric = DistanceMetric::kEuclidean);

  std::size_t n_points() const { return training_.size(); }
  std::size_t k() const { return k_; }
  const std::vector<LabeledPoint>& training() const { return training_; }
  const LabeledPoint& test_point() const { return test_; }

  // order()[r] = original index of the (r+1)-th closest training point.
  const std::vector<std::size_t>& order() const { return order_; }

  // 1 when the training point (original index) matches the test label.
  bool Matches(std::size_t original_index) const { return matches_[original_index]; }

  // U(S) = (1/K) * number of label matches among the min(|S|, K) members of
  // S closest to the test point.
  double Utility(const PlayerSubset& subset) const;

  // The utility as a Game with range [0, 1].
  Game AsGame() const;

 private:
  std::vector<LabeledPoint> training_;
  LabeledPoint test_;
  std::size_t k_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_;  // rank_[original] = position in order_
  std::vector<bool> matches_;
};

double Distance(std::span<const double> a, std::span<const double> b,
                DistanceMetric metric);

// Farthest-to-nearest recursion. Values are reported in original order.
ValueVector KnnShapleyExact(const KnnInstance& instance);

// Mean of the per-test-point values. All instances must share the same
// training points.
ValueVector KnnShapleyTestset(std::span<const KnnInstance> instances);

// sum_{i=0}^{min(a,n)} sum_{j=0}^{m} C(n,i) C(m,j) / C(n+m, i+j).
double PascalIdentityLhs(std::size_t a, std::size_t n, std::size_t m);

// (min(a,n) + 1)(m + n + 1)/(n + 1).
double PascalIdentityRhs(std::size_t a, std::size_t n, std::size_t m);

}  // namespace shapval

#endif  // SHAPVAL_KNN_HPP_
