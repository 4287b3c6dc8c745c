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

// Experiment configuration, dispatch and result serialisation behind the
// shapval command-line tool.

#ifndef SHAPVAL_EXPERIMENT_HPP_
#define SHAPVAL_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shapval/error.hpp"
#include "shapval/game.hpp"
#include "shapval/knn.hpp"

namespace shapval {

// Either a synthetic game (kind = additive | symmetric | glove | voting |
// random) or a dataset (kind = dataset, with train/test CSV paths).
struct GameSpec {
  std::string kind;
  std::vector<double> weights;
  double quota = 0.0;
  std::size_t players = 0;
  double total = 1.0;
  double exponent = 1.0;
  std::size_t n_left = 1;
  std::size_t n_right = 2;
  std::uint64_t game_seed = 0;
  std::string train_path;
  std::string test_path;
  std::size_t k = 1;
};

struct ExperimentConfig {
  std::string method;
  GameSpec game;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> permutations;
  std::optional<std::uint64_t> tests;
  std::optional<std::size_t> measurements;
  std::string recovery = "feasibility";
  double l2 = 1.0;  // logistic penalty for loo-influence on datasets
  bool with_oracle = false;
  std::string output;
  std::string format = "csv";
  // Sweep only.
  std::string sweep_method = "perm";
  std::vector<std::uint64_t> budgets;
  std::size_t sweep_seeds = 20;
};

struct ErrorMetrics {
  double l2 = 0.0;
  double linf = 0.0;

  bool operator==(const ErrorMetrics&) const = default;
};

struct ResultRecord {
  std::vector<double> values;
  std::string method;
  std::uint64_t eval_count = 0;
  double wall_seconds = 0.0;
  std::optional<ErrorMetrics> metrics;  // present iff an oracle was computed
  std::optional<std::uint64_t> seed;
  bool certified = true;
  std::optional<std::uint64_t> budget;  // sweep entries only

  bool operator==(const ResultRecord&) const = default;
};

using KeyValues = std::map<std::string, std::string>;

// Flat "key = value" text; '#' starts a comment. Throws IoError/ConfigError.
KeyValues ParseConfigText(const std::string& text);
KeyValues ReadConfigFile(const std::string& path);

// Builds a config from key/value pairs. Keys mirror the long CLI flags
// (epsilon, delta, seed, permutations, tests, measurements, recovery,
// with-oracle, output, format, game, weights, quota, players, total,
// exponent, left, right, game-seed, train, test, k, l2, budgets,
// sweep-method, sweep-seeds, method).
ExperimentConfig ConfigFromKeyValues(const KeyValues& kv);

// Labeled rows "f1,...,fd,label"; a non-numeric first row is a header.
std::vector<LabeledPoint> ReadDatasetCsv(const std::string& path);

// The cooperative game a config describes. Dataset specs give the KNN
// utility averaged over the test points.
Game BuildGame(const ExperimentConfig& config);

ErrorMetrics CompareToOracle(const std::vector<double>& estimate,
                             const std::vector<double>& oracle);

// Oracle metrics are attached when with_oracle is set and N <= 20.
ResultRecord RunExperiment(const ExperimentConfig& config);

// One record per budget. Each budget runs sweep_seeds repetitions; the
// record holds the first repetition's values and the median error metrics.
std::vector<ResultRecord> SweepBudgets(const ExperimentConfig& config,
                                       const std::vector<std::uint64_t>& budgets);

// CSV: header "player,value", values printed with 17 significant digits.
void WriteValuesCsv(const ResultRecord& record, std::ostream& out);
std::vector<double> ReadValuesCsv(std::istream& in);

std::string RecordToJson(const ResultRecord& record, bool include_values);
ResultRecord RecordFromJson(const std::string& text);

// format "csv": values to `path`, metadata to the sibling "<stem>.json".
// format "json": one JSON document with values and metadata.
// Files are written to a temporary name and renamed into place.
void WriteRecord(const ResultRecord& record, const std::string& path,
                 const std::string& format);
ResultRecord ReadRecord(const std::string& path, const std::string& format);

// CSV "budget,eval_count,l2_median,linf_median".
void WriteSweepCsv(const std::vector<ResultRecord>& records, std::ostream& out);

std::string SiblingJsonPath(const std::string& csv_path);

// Process exit code per error class; 0 means success.
int ExitCodeFor(ErrorKind kind);

}  // namespace shapval

#endif  // SHAPVAL_EXPERIMENT_HPP_
