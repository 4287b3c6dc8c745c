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

#include "shapval/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shapval/error.hpp"
#include "shapval/parallel.hpp"

namespace shapval {

double Distance(std::span<const double> a, std::span<const double> b,
                DistanceMetric metric) {
  if (a.size() != b.size()) throw ArgumentError("feature dimensions differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += metric == DistanceMetric::kEuclidean ? d * d : std::abs(d);
  }
  return metric == DistanceMetric::kEuclidean ? std::sqrt(acc) : acc;
}

KnnInstance::KnnInstance(std::vector<LabeledPoint> training, LabeledPoint test_point,
                         std::size_t k_neighbors, DistanceMetric metric)
    : training_(std::move(training)), test_(std::move(test_point)), k_(k_neighbors) {
  const std::size_t n = training_.size();
  if (k_ == 0) throw ArgumentError("K must be at least 1");
  if (k_ >= n) throw ArgumentError("K must be smaller than the number of training points");

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = Distance(training_[i].features, test_.features, metric);
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t x, std::size_t y) { return dist[x] < dist[y]; });
  rank_.resize(n);
  for (std::size_t r = 0; r < n; ++r) rank_[order_[r]] = r;
  matches_.resize(n);
  for (std::size_t i = 0; i < n; ++i) matches_[i] = training_[i].label == test_.label;
}

double KnnInstance::Utility(const PlayerSubset& subset) const {
  std::vector<std::size_t> ranks;
  for (Player p : subset.Members()) ranks.push_back(rank_[p]);
  const std::size_t take = std::min(ranks.size(), k_);
  std::partial_sort(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(take), ranks.end());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < take; ++i) hits += matches_[order_[ranks[i]]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k_);
}

Game KnnInstance::AsGame() const {
  auto self = *this;
  return Game(n_points(), [self](const PlayerSubset& s) { return self.Utility(s); }, 1.0);
}

ValueVector KnnShapleyExact(const KnnInstance& instance) {
  const std::size_t n = instance.n_points();
  const double kd = static_cast<double>(instance.k());
  const auto& order = instance.order();
  auto hit = [&](std::size_t rank) { return instance.Matches(order[rank]) ? 1.0 : 0.0; };

  // Ranks are 0-based here; the closed form uses i = rank + 1.
  std::vector<double> by_rank(n);
  by_rank[n - 1] = hit(n - 1) / static_cast<double>(n);
  for (std::size_t r = n - 1; r-- > 0;) {
    const double i = static_cast<double>(r + 1);
    const double window = std::min(kd - 1.0, i - 1.0) + 1.0;
    by_rank[r] = by_rank[r + 1] + (hit(r) - hit(r + 1)) / kd * window / i;
  }

  ValueVector out;
  out.method = Method::kKnn;
  out.values.resize(n);
  for (std::size_t r = 0; r < n; ++r) out.values[order[r]] = by_rank[r];
  return out;
}

ValueVector KnnShapleyTestset(std::span<const KnnInstance> instances) {
  if (instances.empty()) throw ArgumentError("no test points");
  const auto& reference = instances.front().training();
  for (const auto& inst : instances) {
    const auto& other = inst.training();
    bool same = other.size() == reference.size();
    for (std::size_t i = 0; same && i < other.size(); ++i) {
      same = other[i].features == reference[i].features && other[i].label == reference[i].label;
    }
    if (!same) throw ArgumentError("test instances do not share the same training points");
  }

  const std::size_t n = reference.size();
  std::vector<ValueVector> per_point(instances.size());
  ParallelForChunks(instances.size(),
                    [&](std::size_t t) { per_point[t] = KnnShapleyExact(instances[t]); });

  ValueVector out;
  out.method = Method::kKnn;
  out.values.assign(n, 0.0);
  for (const auto& v : per_point) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] += v.values[i];
  }
  for (auto& v : out.values) v /= static_cast<double>(instances.size());
  return out;
}

double PascalIdentityLhs(std::size_t a, std::size_t n, std::size_t m) {
  double sum = 0.0;
  const std::size_t top = std::min(a, n);
  for (std::size_t i = 0; i <= top; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      sum += std::exp(LogBinomial(n, i) + LogBinomial(m, j) - LogBinomial(n + m, i + j));
    }
  }
  return sum;
}

double PascalIdentityRhs(std::size_t a, std::size_t n, std::size_t m) {
  return static_cast<double>(std::min(a, n) + 1) * static_cast<double>(m + n + 1) /
         static_cast<double>(n + 1);
}

}  // namespace shapval
