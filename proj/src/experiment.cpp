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

#include "shapval/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "shapval/analytics.hpp"
#include "shapval/compressive.hpp"
#include "shapval/group_testing.hpp"
#include "shapval/permutation.hpp"
#include "shapval/rng.hpp"

namespace shapval {
namespace {

using Json = nlohmann::json;

constexpr std::size_t kOracleMaxPlayers = 20;

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(Trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> TryDouble(const std::string& s) {
  const std::string t = Trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

double ParseDouble(const std::string& key, const std::string& s) {
  const auto v = TryDouble(s);
  if (!v || !std::isfinite(*v)) throw ConfigError("'" + key + "' expects a number, got '" + s + "'");
  return *v;
}

std::uint64_t ParseUint(const std::string& key, const std::string& s) {
  const std::string t = Trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + s + "'");
  }
  return v;
}

bool ParseBool(const std::string& key, const std::string& s) {
  const std::string t = Trim(s);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + s + "'");
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double RequireEpsilon(const ExperimentConfig& c) {
  if (!c.epsilon) throw ConfigError("method '" + c.method + "' needs --epsilon");
  return *c.epsilon;
}

double RequireDelta(const ExperimentConfig& c) {
  if (!c.delta) throw ConfigError("method '" + c.method + "' needs --delta");
  return *c.delta;
}

std::vector<KnnInstance> BuildKnnInstances(const ExperimentConfig& config) {
  const GameSpec& g = config.game;
  if (g.train_path.empty() || g.test_path.empty()) {
    throw ConfigError("dataset games need --train and --test");
  }
  std::vector<LabeledPoint> train = ReadDatasetCsv(g.train_path);
  std::vector<LabeledPoint> test = ReadDatasetCsv(g.test_path);
  if (train.empty() || test.empty()) throw ConfigError("dataset files contain no rows");
  std::vector<KnnInstance> out;
  out.reserve(test.size());
  for (auto& t : test) out.emplace_back(train, std::move(t), g.k);
  return out;
}

// Design matrix and +-1 labels from labeled rows.
void ToLogisticData(const std::vector<LabeledPoint>& rows, Eigen::MatrixXd& x,
                    Eigen::VectorXd& y) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().features.size());
  x.resize(n, d);
  y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.features.size()) != d) {
      throw ConfigError("dataset rows have inconsistent feature counts");
    }
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = row.features[static_cast<std::size_t>(j)];
    const auto label = TryDouble(row.label);
    if (!label || (*label != 1.0 && *label != -1.0)) {
      throw ConfigError("loo-influence needs labels -1 or +1, got '" + row.label + "'");
    }
    y(i) = *label;
  }
}

ValueVector RunLooInfluence(const ExperimentConfig& config) {
  if (config.game.kind != "dataset") {
    const Game game = BuildGame(config);
    const std::vector<double> marginals = LeaveOneOutMarginals(game);
    ValueVector v = LargestSValues(marginals, game.u_total());
    v.eval_count = game.n_players();
    return v;
  }
  Eigen::MatrixXd x, tx;
  Eigen::VectorXd y, ty;
  ToLogisticData(ReadDatasetCsv(config.game.train_path), x, y);
  ToLogisticData(ReadDatasetCsv(config.game.test_path), tx, ty);
  if (tx.cols() != x.cols()) throw ConfigError("train and test feature counts differ");
  const LogisticModel model = FitLogistic(x, y, config.l2);
  const std::vector<double> marginals = InfluenceMarginals(model, tx, ty);
  // U(S) = L_test(0) - L_test(theta_S); the empty model predicts 1/2.
  const double u_total = std::log(2.0) - LogisticLoss(model.theta, tx, ty);
  ValueVector v = LargestSValues(marginals, u_total);
  v.eval_count = 0;
  return v;
}

ValueVector Dispatch(const ExperimentConfig& config, const Game* game) {
  const std::string& m = config.method;
  if (m == "exact") return ExactShapleySubsets(*game);
  if (m == "perm") {
    PermutationBudget budget;
    if (config.permutations) {
      budget.t_permutations = *config.permutations;
      budget.epsilon = config.epsilon;
      budget.delta = config.delta;
      budget.range_r = game->range_r();
    } else {
      const double eps = RequireEpsilon(config);
      budget = BudgetFor(*game, eps, RequireDelta(config));
    }
    return EstimatePermutation(*game, budget, config.seed);
  }
  if (m == "group-test") {
    GroupTestOptions opt;
    opt.epsilon = RequireEpsilon(config);
    opt.delta = RequireDelta(config);
    opt.tests = config.tests;
    if (config.recovery == "feasibility") {
      opt.recovery = Recovery::kFeasibility;
    } else if (config.recovery == "baseline") {
      opt.recovery = Recovery::kBaseline;
    } else {
      throw ConfigError("--recovery must be feasibility or baseline");
    }
    return EstimateGroupTesting(*game, opt, config.seed);
  }
  if (m == "compressive") {
    if (!config.measurements) throw ConfigError("compressive needs --measurements");
    const double eps = RequireEpsilon(config);
    const std::uint64_t t =
        config.permutations
            ? *config.permutations
            : RequiredTCompressive(game->range_r(), eps, RequireDelta(config), *config.measurements);
    return EstimateCompressive(*game, *config.measurements, t, eps, config.seed);
  }
  if (m == "uniform") return UniformDivision(game->u_total(), game->n_players());
  throw UnknownMethodError("unknown method '" + m + "'");
}

bool IsKnownMethod(const std::string& m) {
  for (const char* known : {"exact", "perm", "group-test", "compressive", "knn", "uniform",
                            "loo-influence", "sweep"}) {
    if (m == known) return true;
  }
  return false;
}

void WriteAtomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << contents;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

KeyValues ParseConfigText(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = Trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues ReadConfigFile(const std::string& path) { return ParseConfigText(ReadFile(path)); }

ExperimentConfig ConfigFromKeyValues(const KeyValues& kv) {
  ExperimentConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "method") {
      c.method = value;
    } else if (key == "epsilon") {
      c.epsilon = ParseDouble(key, value);
    } else if (key == "delta") {
      c.delta = ParseDouble(key, value);
    } else if (key == "seed") {
      c.seed = ParseUint(key, value);
    } else if (key == "permutations") {
      c.permutations = ParseUint(key, value);
    } else if (key == "tests") {
      c.tests = ParseUint(key, value);
    } else if (key == "measurements") {
      c.measurements = ParseUint(key, value);
    } else if (key == "recovery") {
      c.recovery = value;
    } else if (key == "with-oracle") {
      c.with_oracle = ParseBool(key, value);
    } else if (key == "output") {
      c.output = value;
    } else if (key == "format") {
      c.format = value;
    } else if (key == "game") {
      c.game.kind = value;
    } else if (key == "weights") {
      c.game.weights.clear();
      for (const auto& w : Split(value, ',')) c.game.weights.push_back(ParseDouble(key, w));
    } else if (key == "quota") {
      c.game.quota = ParseDouble(key, value);
    } else if (key == "players") {
      c.game.players = ParseUint(key, value);
    } else if (key == "total") {
      c.game.total = ParseDouble(key, value);
    } else if (key == "exponent") {
      c.game.exponent = ParseDouble(key, value);
    } else if (key == "left") {
      c.game.n_left = ParseUint(key, value);
    } else if (key == "right") {
      c.game.n_right = ParseUint(key, value);
    } else if (key == "game-seed") {
      c.game.game_seed = ParseUint(key, value);
    } else if (key == "train") {
      c.game.train_path = value;
    } else if (key == "test") {
      c.game.test_path = value;
    } else if (key == "k") {
      c.game.k = ParseUint(key, value);
    } else if (key == "l2") {
      c.l2 = ParseDouble(key, value);
    } else if (key == "budgets") {
      c.budgets.clear();
      if (!Trim(value).empty()) {
        for (const auto& b : Split(value, ',')) c.budgets.push_back(ParseUint(key, b));
      }
    } else if (key == "sweep-method") {
      c.sweep_method = value;
    } else if (key == "sweep-seeds") {
      c.sweep_seeds = ParseUint(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!c.game.train_path.empty() && c.game.kind.empty()) c.game.kind = "dataset";
  if (c.format != "csv" && c.format != "json") throw ConfigError("--format must be csv or json");
  if (!c.method.empty() && !IsKnownMethod(c.method)) {
    throw UnknownMethodError("unknown method '" + c.method + "'");
  }
  return c;
}

std::vector<LabeledPoint> ReadDatasetCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset '" + path + "'");
  std::vector<LabeledPoint> rows;
  std::string line;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = Split(line, ',');
    if (fields.size() < 2) throw ConfigError("dataset row needs features and a label: '" + line + "'");
    LabeledPoint p;
    bool numeric = true;
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      const auto v = TryDouble(fields[i]);
      if (!v) {
        numeric = false;
        break;
      }
      p.features.push_back(*v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw ConfigError("non-numeric feature in dataset row: '" + line + "'");
    }
    first = false;
    if (width == 0) width = p.features.size();
    if (p.features.size() != width) throw ConfigError("dataset rows have inconsistent widths");
    p.label = fields.back();
    rows.push_back(std::move(p));
  }
  return rows;
}

Game BuildGame(const ExperimentConfig& config) {
  const GameSpec& g = config.game;
  if (g.kind == "additive") return MakeAdditiveGame(g.weights);
  if (g.kind == "symmetric") return MakeSymmetricGame(g.players, g.total, g.exponent);
  if (g.kind == "glove") return MakeGloveGame(g.n_left, g.n_right);
  if (g.kind == "voting") return MakeVotingGame(g.weights, g.quota);
  if (g.kind == "random") return MakeRandomGame(g.players, g.game_seed);
  if (g.kind == "dataset") {
    auto instances = std::make_shared<const std::vector<KnnInstance>>(BuildKnnInstances(config));
    const std::size_t n = instances->front().n_points();
    auto utility = [instances](const PlayerSubset& s) {
      double sum = 0.0;
      for (const auto& inst : *instances) sum += inst.Utility(s);
      return sum / static_cast<double>(instances->size());
    };
    return Game(n, utility, 1.0);
  }
  if (g.kind.empty()) throw ConfigError("no game specified (use --game or --train/--test)");
  throw ConfigError("unknown game kind '" + g.kind + "'");
}

ErrorMetrics CompareToOracle(const std::vector<double>& estimate,
                             const std::vector<double>& oracle) {
  if (estimate.size() != oracle.size()) throw ArgumentError("length mismatch against oracle");
  ErrorMetrics m;
  double sq = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - oracle[i];
    sq += d * d;
    m.linf = std::max(m.linf, std::abs(d));
  }
  m.l2 = std::sqrt(sq);
  return m;
}

ResultRecord RunExperiment(const ExperimentConfig& config) {
  if (config.method.empty()) throw ConfigError("no method given");
  if (!IsKnownMethod(config.method)) {
    throw UnknownMethodError("unknown method '" + config.method + "'");
  }
  if (config.method == "sweep") throw ConfigError("use SweepBudgets for sweep");

  const auto start = std::chrono::steady_clock::now();
  ValueVector values;
  std::optional<Game> game;
  if (config.method == "knn") {
    if (config.game.kind != "dataset") throw ConfigError("knn needs --train and --test");
    const std::vector<KnnInstance> instances = BuildKnnInstances(config);
    values = KnnShapleyTestset(instances);
    if (config.with_oracle) game.emplace(BuildGame(config));
  } else if (config.method == "loo-influence") {
    values = RunLooInfluence(config);
    if (config.with_oracle && config.game.kind != "dataset") game.emplace(BuildGame(config));
  } else {
    game.emplace(BuildGame(config));
    values = Dispatch(config, &*game);
  }

  ResultRecord record;
  if (config.with_oracle && game) {
    if (game->n_players() > kOracleMaxPlayers) {
      throw SizeGuardError("oracle limited to " + std::to_string(kOracleMaxPlayers) + " players");
    }
    const ValueVector oracle = ExactShapleySubsets(*game, kOracleMaxPlayers);
    record.metrics = CompareToOracle(values.values, oracle.values);
  }
  record.values = values.values;
  record.method = config.method;
  record.eval_count = values.eval_count;
  record.seed = values.seed;
  record.certified = values.certified;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

std::vector<ResultRecord> SweepBudgets(const ExperimentConfig& config,
                                       const std::vector<std::uint64_t>& budgets) {
  std::vector<ResultRecord> out;
  if (budgets.empty()) return out;
  const Game game = BuildGame(config);
  if (game.n_players() > kOracleMaxPlayers) {
    throw SizeGuardError("sweep needs an oracle-feasible game (N <= 20)");
  }
  const std::vector<double> oracle = ExactShapleySubsets(game, kOracleMaxPlayers).values;
  if (config.sweep_seeds == 0) throw ConfigError("sweep-seeds must be positive");

  for (std::size_t b = 0; b < budgets.size(); ++b) {
    ExperimentConfig run = config;
    run.method = config.sweep_method;
    run.with_oracle = false;
    if (run.method == "perm" || run.method == "compressive") {
      run.permutations = budgets[b];
    } else if (run.method == "group-test") {
      run.tests = budgets[b];
    } else {
      throw ConfigError("sweep-method must be perm, group-test or compressive");
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<double> l2s;
    std::vector<double> linfs;
    ResultRecord first;
    for (std::size_t rep = 0; rep < config.sweep_seeds; ++rep) {
      RngStream seeds(config.seed, StreamTag::kSweep, (static_cast<std::uint64_t>(b) << 32) | rep);
      run.seed = seeds.NextU64();
      const ValueVector v = Dispatch(run, &game);
      const ErrorMetrics m = CompareToOracle(v.values, oracle);
      l2s.push_back(m.l2);
      linfs.push_back(m.linf);
      if (rep == 0) {
        first.values = v.values;
        first.eval_count = v.eval_count;
        first.seed = v.seed;
        first.certified = v.certified;
      }
    }
    first.method = run.method;
    first.budget = budgets[b];
    first.metrics = ErrorMetrics{Median(l2s), Median(linfs)};
    first.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(first));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialisation

void WriteValuesCsv(const ResultRecord& record, std::ostream& out) {
  out << "player,value\n";
  for (std::size_t i = 0; i < record.values.size(); ++i) {
    out << i << ',' << FormatDouble(record.values[i]) << '\n';
  }
}

std::vector<double> ReadValuesCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || Trim(line) != "player,value") {
    throw ConfigError("values CSV must start with 'player,value'");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    const auto fields = Split(line, ',');
    if (fields.size() != 2) throw ConfigError("bad values CSV row: '" + line + "'");
    const std::uint64_t idx = ParseUint("player", fields[0]);
    if (idx != values.size()) throw ConfigError("values CSV players out of order");
    values.push_back(ParseDouble("value", fields[1]));
  }
  return values;
}

std::string RecordToJson(const ResultRecord& record, bool include_values) {
  Json j;
  j["method"] = record.method;
  j["eval_count"] = record.eval_count;
  j["wall_seconds"] = record.wall_seconds;
  j["certified"] = record.certified;
  j["seed"] = record.seed ? Json(*record.seed) : Json(nullptr);
  if (record.metrics) {
    j["metrics"] = {{"l2", record.metrics->l2}, {"linf", record.metrics->linf}};
  }
  if (record.budget) j["budget"] = *record.budget;
  if (include_values) j["values"] = record.values;
  return j.dump(2) + "\n";
}

ResultRecord RecordFromJson(const std::string& text) {
  ResultRecord r;
  try {
    const Json j = Json::parse(text);
    r.method = j.at("method").get<std::string>();
    r.eval_count = j.at("eval_count").get<std::uint64_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.certified = j.at("certified").get<bool>();
    if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("metrics")) {
      r.metrics = ErrorMetrics{j["metrics"].at("l2").get<double>(),
                               j["metrics"].at("linf").get<double>()};
    }
    if (j.contains("budget")) r.budget = j["budget"].get<std::uint64_t>();
    if (j.contains("values")) r.values = j["values"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed result JSON: ") + e.what());
  }
  return r;
}

std::string SiblingJsonPath(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  if (p.string() == csv_path) p += ".meta.json";
  return p.string();
}

void WriteRecord(const ResultRecord& record, const std::string& path,
                 const std::string& format) {
  if (format == "json") {
    WriteAtomically(path, RecordToJson(record, true));
  } else if (format == "csv") {
    std::ostringstream csv;
    WriteValuesCsv(record, csv);
    WriteAtomically(path, csv.str());
    WriteAtomically(SiblingJsonPath(path), RecordToJson(record, false));
  } else {
    throw ConfigError("unknown output format '" + format + "'");
  }
}

ResultRecord ReadRecord(const std::string& path, const std::string& format) {
  if (format == "json") return RecordFromJson(ReadFile(path));
  if (format != "csv") throw ConfigError("unknown output format '" + format + "'");
  ResultRecord r = RecordFromJson(ReadFile(SiblingJsonPath(path)));
  std::istringstream in(ReadFile(path));
  r.values = ReadValuesCsv(in);
  return r;
}

void WriteSweepCsv(const std::vector<ResultRecord>& records, std::ostream& out) {
  out << "budget,eval_count,l2_median,linf_median\n";
  for (const auto& r : records) {
    out << (r.budget ? *r.budget : 0) << ',' << r.eval_count << ','
        << FormatDouble(r.metrics ? r.metrics->l2 : NAN) << ','
        << FormatDouble(r.metrics ? r.metrics->linf : NAN) << '\n';
  }
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kUnknownMethod: return 3;
    case ErrorKind::kIo: return 4;
    case ErrorKind::kSizeGuard: return 5;
    case ErrorKind::kArgument: return 6;
    case ErrorKind::kRange: return 7;
    case ErrorKind::kNumerical: return 8;
  }
  return 1;
}

}  // namespace shapval
