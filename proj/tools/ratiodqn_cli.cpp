// Copyright 2026 The ratiodqn Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: run | single | eval | grid.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "ratiodqn/checkpoint.hpp"
#include "ratiodqn/harness.hpp"

namespace {

using ratiodqn::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

std::string FlagName(std::string key) {
  for (auto& c : key) {
    if (c == '_' || c == '.') c = '-';
  }
  return "--" + key;
}

// Holds the raw text of every config flag given on the command line.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void Register(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON config file");
    for (const auto& f : ratiodqn::ConfigFields()) {
      app->add_option(FlagName(f.key), values[f.key], "config key " + f.key);
    }
  }

  // Defaults, then the config file, then flags.
  ExperimentConfig Resolve(CLI::App* app) const {
    nlohmann::json merged = nlohmann::json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ratiodqn::ConfigError("cannot read config file " + config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string text = ss.str();
      if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
        try {
          merged = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
          throw ratiodqn::ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
      }
    }
    ExperimentConfig cfg;
    ratiodqn::ApplyJson(cfg, merged);
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& f : ratiodqn::ConfigFields()) {
      if (app->count(FlagName(f.key)) == 0) continue;
      std::string path = "/" + f.key;
      for (auto& c : path) if (c == '.') c = '/';
      overrides[nlohmann::json::json_pointer(path)] = ratiodqn::FlagValue(f, values.at(f.key));
    }
    ratiodqn::ApplyJson(cfg, overrides);
    return cfg;
  }
};

void PrintProgress(const ratiodqn::SweepRun& run, std::size_t done, std::size_t total) {
  std::fprintf(stderr, "[%zu/%zu] ratio %s k=%d seed=%d lr=%g score=%.3f reward=%.1f%s\n",
               done, total, run.ratio.ToString().c_str(), run.k, run.seed_index, run.lr,
               run.result.final_score, run.result.final_reward,
               run.result.diverged ? " DIVERGED" : "");
}

void PrintSummary(const ratiodqn::SweepResult& sweep) {
  std::printf("%s", ratiodqn::SummaryCsv(sweep).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Q-learning learning-step-ratio experiments"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "full sweep over ratios x k x seeds");
  run_flags.Register(run);

  ConfigFlags single_flags;
  std::string single_ratio = "1:1";
  int single_k = 0;
  int single_seed = 0;
  auto* single = app.add_subcommand("single", "one ratio / k / seed");
  single_flags.Register(single);
  single->add_option("--ratio", single_ratio, "learning step ratio u:s")->required();
  single->add_option("--k", single_k, "learning-rate exponent")->required();
  single->add_option("--seed", single_seed, "seed index")->required();

  ConfigFlags eval_flags;
  std::string checkpoint_path;
  auto* eval = app.add_subcommand("eval", "evaluate an agent checkpoint greedily");
  eval_flags.Register(eval);
  eval->add_option("--checkpoint", checkpoint_path, "agent checkpoint file")->required();

  std::string grid_ratio;
  auto* grid = app.add_subcommand("grid", "print the learning-rate grid for a ratio");
  grid->add_option("ratio", grid_ratio, "learning step ratio u:s")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*grid) {
      const auto ratio = ratiodqn::LearnRatio::Parse(grid_ratio);
      const auto lrs = ratiodqn::LrGrid(ratio);
      std::printf("k,lr\n");
      for (std::size_t i = 0; i < lrs.size(); ++i) {
        std::printf("%d,%s\n", ratiodqn::kDefaultGridExponents[i],
                    ratiodqn::FormatNumber(lrs[i]).c_str());
      }
      return kExitOk;
    }
    if (*run) {
      const auto cfg = run_flags.Resolve(run);
      PrintSummary(ratiodqn::RunExperiment(cfg, PrintProgress));
      return kExitOk;
    }
    if (*single) {
      auto cfg = single_flags.Resolve(single);
      cfg.ratios = {ratiodqn::LearnRatio::Parse(single_ratio).ToString()};
      cfg.k_values = {single_k};
      cfg.train.seeds = {single_seed};
      PrintSummary(ratiodqn::RunExperiment(cfg, PrintProgress));
      return kExitOk;
    }
    if (*eval) {
      const auto cfg = eval_flags.Resolve(eval);
      cfg.Validate();
      const auto agent = ratiodqn::LoadAgent(checkpoint_path);
      auto env = ratiodqn::MakeEnvironment(cfg.train.env);
      const auto point = ratiodqn::RunEval(agent, *env, cfg.train.eval_episodes, cfg.train.eval_seed);
      std::printf("episodes,mean_score,mean_reward\n%d,%s,%s\n", cfg.train.eval_episodes,
                  ratiodqn::FormatNumber(point.mean_score).c_str(),
                  ratiodqn::FormatNumber(point.mean_reward).c_str());
      return kExitOk;
    }
  } catch (const ratiodqn::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const ratiodqn::ShapeError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const ratiodqn::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const ratiodqn::IntegrityError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitIo;
  }
  return kExitOk;
}
