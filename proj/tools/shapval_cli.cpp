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


// shapval: command-line front end for the data valuation estimators.
//
//   shapval perm --game glove --epsilon 0.1 --delta 0.05 --seed 7 --with-oracle
//   shapval knn --train train.csv --test test.csv --k 3 --output values.csv
//   shapval sweep --game random --players 8 --budgets 10,100,1000

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shapval/error.hpp"
#include "shapval/experiment.hpp"

namespace {

using shapval::KeyValues;

struct Flag {
  const char* name;
  const char* help;
};

constexpr Flag kFlags[] = {
    {"epsilon", "accuracy target"},
    {"delta", "failure probability"},
    {"seed", "master random seed"},
    {"output", "output path (stdout when omitted)"},
    {"format", "csv or json"},
    {"permutations", "override the number of sampled permutations"},
    {"tests", "override the number of group tests"},
    {"measurements", "number of compressive measurements M"},
    {"recovery", "group-test recovery: feasibility or baseline"},
    {"game", "additive | symmetric | glove | voting | random"},
    {"weights", "comma-separated player weights"},
    {"quota", "voting quota"},
    {"players", "number of players"},
    {"total", "grand coalition utility of the symmetric game"},
    {"exponent", "curvature of the symmetric game"},
    {"left", "left-glove holders"},
    {"right", "right-glove holders"},
    {"game-seed", "seed of the random game table"},
    {"train", "training CSV (features..., label)"},
    {"test", "test CSV (features..., label)"},
    {"k", "neighbours for the KNN utility"},
    {"l2", "logistic ridge penalty for loo-influence"},
    {"budgets", "comma-separated budgets for sweep"},
    {"sweep-method", "estimator swept: perm, group-test or compressive"},
    {"sweep-seeds", "repetitions per budget"},
};

void Emit(const shapval::ResultRecord& record, const shapval::ExperimentConfig& config) {
  if (!config.output.empty()) {
    shapval::WriteRecord(record, config.output, config.format);
    return;
  }
  if (config.format == "json") {
    std::cout << shapval::RecordToJson(record, true);
  } else {
    shapval::WriteValuesCsv(record, std::cout);
  }
}

void EmitSweep(const std::vector<shapval::ResultRecord>& records,
               const shapval::ExperimentConfig& config) {
  if (config.output.empty()) {
    shapval::WriteSweepCsv(records, std::cout);
    return;
  }
  std::ostringstream csv;
  shapval::WriteSweepCsv(records, csv);
  const std::string tmp = config.output + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out || !(out << csv.str())) throw shapval::IoError("cannot write '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, config.output, ec);
  if (ec) throw shapval::IoError("cannot write '" + config.output + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shapley-value data valuation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool with_oracle = false;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_flag("--with-oracle", with_oracle, "attach error metrics against the exact values");

  std::vector<std::string> flag_values(std::size(kFlags));
  std::vector<CLI::Option*> flag_options;
  for (std::size_t i = 0; i < std::size(kFlags); ++i) {
    flag_options.push_back(
        app.add_option(std::string("--") + kFlags[i].name, flag_values[i], kFlags[i].help));
  }

  const char* methods[] = {"exact", "perm", "group-test", "compressive",
                           "knn",   "uniform", "loo-influence", "sweep"};
  for (const char* m : methods) app.add_subcommand(m, std::string("run the ") + m + " method");

  if (argc > 1 && argv[1][0] != '-' &&
      std::find(std::begin(methods), std::end(methods), std::string(argv[1])) ==
          std::end(methods)) {
    std::cerr << "error (unknown-method): unknown method '" << argv[1] << "'\n";
    return shapval::ExitCodeFor(shapval::ErrorKind::kUnknownMethod);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : shapval::ExitCodeFor(shapval::ErrorKind::kConfig);
  }

  try {
    KeyValues kv;
    if (!config_path.empty()) kv = shapval::ReadConfigFile(config_path);
    for (std::size_t i = 0; i < flag_options.size(); ++i) {
      if (flag_options[i]->count() > 0) kv[kFlags[i].name] = flag_values[i];
    }
    if (with_oracle) kv["with-oracle"] = "true";
    kv["method"] = app.get_subcommands().front()->get_name();

    const shapval::ExperimentConfig config = shapval::ConfigFromKeyValues(kv);
    if (config.method == "sweep") {
      EmitSweep(shapval::SweepBudgets(config, config.budgets), config);
    } else {
      const shapval::ResultRecord record = shapval::RunExperiment(config);
      Emit(record, config);
      if (!record.certified) std::cerr << "warning: guarantee not certified for this run\n";
    }
  } catch (const shapval::Error& e) {
    std::cerr << "error (" << shapval::ErrorKindName(e.kind()) << "): " << e.what() << "\n";
    return shapval::ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
