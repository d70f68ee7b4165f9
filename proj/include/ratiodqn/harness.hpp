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

#ifndef RATIODQN_HARNESS_HPP_
#define RATIODQN_HARNESS_HPP_

// Experiment configuration, sweep orchestration and CSV output.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ratiodqn/checkpoint.hpp"
#include "ratiodqn/errors.hpp"
#include "ratiodqn/eval.hpp"
#include "ratiodqn/ratio.hpp"
#include "ratiodqn/trainer.hpp"

namespace ratiodqn {

using nlohmann::json;

struct ExperimentConfig {
  TrainConfig train;
  std::vector<std::string> ratios{"4:1", "2:1", "1:1", "1:2", "1:4", "1:8", "1:16", "1:32"};
  std::vector<int> k_values{-2, -1, 0, 1, 2};
  std::uint64_t base_seed = 0;
  std::string output_dir = "results";
  int parallelism = 1;
  bool save_checkpoints = false;

  std::vector<LearnRatio> ParsedRatios() const {
    std::vector<LearnRatio> out;
    for (const auto& r : ratios) out.push_back(LearnRatio::Parse(r));
    return out;
  }

  void Validate() const {
    if (ratios.empty()) throw ConfigError("ratios must not be empty");
    if (k_values.empty()) throw ConfigError("k_values must not be empty");
    if (train.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    ParsedRatios();
    train.Validate();
    MakeEnvironment(train.env);
  }
};

// ---------------------------------------------------------------------------
// Config keys

enum class FieldType { kInt, kUint, kReal, kBool, kString, kIntList, kStringList, kLoss };

struct ConfigField {
  std::string key;  // dotted path, e.g. "healthgrid.kit_heal"
  FieldType type;
  std::function<void(ExperimentConfig&, const json&)> set;
  std::function<json(const ExperimentConfig&)> get;
};

namespace detail {

inline std::string ExpectedForm(FieldType t) {
  switch (t) {
    case FieldType::kInt: return "an integer";
    case FieldType::kUint: return "a non-negative integer";
    case FieldType::kReal: return "a number";
    case FieldType::kBool: return "true or false";
    case FieldType::kString: return "a string";
    case FieldType::kIntList: return "a list of integers";
    case FieldType::kStringList: return "a list of strings";
    case FieldType::kLoss: return "\"mse\" or \"huber\"";
  }
  return "a value";
}

inline bool Matches(FieldType t, const json& v) {
  switch (t) {
    case FieldType::kInt: return v.is_number_integer();
    case FieldType::kUint: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case FieldType::kReal: return v.is_number();
    case FieldType::kBool: return v.is_boolean();
    case FieldType::kString: return v.is_string();
    case FieldType::kIntList:
      if (!v.is_array()) return false;
      for (const auto& e : v) if (!e.is_number_integer()) return false;
      return true;
    case FieldType::kStringList:
      if (!v.is_array()) return false;
      for (const auto& e : v) if (!e.is_string()) return false;
      return true;
    case FieldType::kLoss: return v.is_string() && (v == "mse" || v == "huber");
  }
  return false;
}

template <typename T, typename Member>
ConfigField Field(std::string key, FieldType type, Member member) {
  return {std::move(key), type,
          [member](ExperimentConfig& c, const json& v) { member(c) = v.get<T>(); },
          [member](const ExperimentConfig& c) {
            return json(member(const_cast<ExperimentConfig&>(c)));
          }};
}

}  // namespace detail

// Every accepted key, in the order config_used.json lists them.
inline const std::vector<ConfigField>& ConfigFields() {
  using detail::Field;
  using E = ExperimentConfig;
  using FT = FieldType;
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    f.push_back(Field<std::vector<std::string>>("ratios", FT::kStringList, [](E& c) -> auto& { return c.ratios; }));
    f.push_back(Field<std::vector<int>>("k_values", FT::kIntList, [](E& c) -> auto& { return c.k_values; }));
    f.push_back(Field<std::vector<int>>("seeds", FT::kIntList, [](E& c) -> auto& { return c.train.seeds; }));
    f.push_back(Field<std::uint64_t>("base_seed", FT::kUint, [](E& c) -> auto& { return c.base_seed; }));
    f.push_back(Field<std::string>("output_dir", FT::kString, [](E& c) -> auto& { return c.output_dir; }));
    f.push_back(Field<int>("parallelism", FT::kInt, [](E& c) -> auto& { return c.parallelism; }));
    f.push_back(Field<bool>("save_checkpoints", FT::kBool, [](E& c) -> auto& { return c.save_checkpoints; }));
    f.push_back(Field<std::int64_t>("total_env_steps", FT::kInt, [](E& c) -> auto& { return c.train.total_env_steps; }));
    f.push_back(Field<int>("batch_size", FT::kInt, [](E& c) -> auto& { return c.train.batch_size; }));
    f.push_back(Field<int>("buffer_capacity", FT::kInt, [](E& c) -> auto& { return c.train.buffer_capacity; }));
    f.push_back(Field<std::int64_t>("target_sync", FT::kInt, [](E& c) -> auto& { return c.train.target_sync; }));
    f.push_back(Field<double>("discount", FT::kReal, [](E& c) -> auto& { return c.train.discount; }));
    f.push_back(Field<double>("epsilon_initial", FT::kReal, [](E& c) -> auto& { return c.train.epsilon_initial; }));
    f.push_back(Field<double>("epsilon_final", FT::kReal, [](E& c) -> auto& { return c.train.epsilon_final; }));
    f.push_back(Field<double>("epsilon_anneal_fraction", FT::kReal, [](E& c) -> auto& { return c.train.epsilon_anneal_fraction; }));
    f.push_back(Field<double>("learning_rate", FT::kReal, [](E& c) -> auto& { return c.train.learning_rate; }));
    f.push_back(Field<int>("warmup_transitions", FT::kInt, [](E& c) -> auto& { return c.train.warmup_transitions; }));
    f.push_back(Field<std::int64_t>("eval_period", FT::kInt, [](E& c) -> auto& { return c.train.eval_period; }));
    f.push_back(Field<int>("eval_episodes", FT::kInt, [](E& c) -> auto& { return c.train.eval_episodes; }));
    f.push_back(Field<std::uint64_t>("eval_seed", FT::kUint, [](E& c) -> auto& { return c.train.eval_seed; }));
    f.push_back(Field<double>("rms_smoothing", FT::kReal, [](E& c) -> auto& { return c.train.rms_smoothing; }));
    f.push_back(Field<double>("rms_epsilon", FT::kReal, [](E& c) -> auto& { return c.train.rms_epsilon; }));
    f.push_back(Field<double>("reward_scale", FT::kReal, [](E& c) -> auto& { return c.train.reward_scale; }));
    f.push_back(Field<std::vector<int>>("hidden_layers", FT::kIntList, [](E& c) -> auto& { return c.train.hidden_layers; }));
    f.push_back({"loss", FT::kLoss,
                 [](E& c, const json& v) { c.train.loss = v == "huber" ? LossKind::kHuber : LossKind::kMse; },
                 [](const E& c) { return json(c.train.loss == LossKind::kHuber ? "huber" : "mse"); }});
    f.push_back({"learn_ratio", FT::kString,
                 [](E& c, const json& v) { c.train.learn_ratio = LearnRatio::Parse(v.get<std::string>()); },
                 [](const E& c) { return json(c.train.learn_ratio.ToString()); }});
    f.push_back(Field<std::string>("env", FT::kString, [](E& c) -> auto& { return c.train.env.name; }));
    f.push_back(Field<int>("frame_skip", FT::kInt, [](E& c) -> auto& { return c.train.env.frame_skip; }));
    f.push_back(Field<int>("healthgrid.grid_size", FT::kInt, [](E& c) -> auto& { return c.train.env.healthgrid.grid_size; }));
    f.push_back(Field<int>("healthgrid.n_kits", FT::kInt, [](E& c) -> auto& { return c.train.env.healthgrid.n_kits; }));
    f.push_back(Field<int>("healthgrid.n_poisons", FT::kInt, [](E& c) -> auto& { return c.train.env.healthgrid.n_poisons; }));
    f.push_back(Field<double>("healthgrid.kit_heal", FT::kReal, [](E& c) -> auto& { return c.train.env.healthgrid.kit_heal; }));
    f.push_back(Field<double>("healthgrid.poison_damage", FT::kReal, [](E& c) -> auto& { return c.train.env.healthgrid.poison_damage; }));
    f.push_back(Field<double>("healthgrid.decay_per_step", FT::kReal, [](E& c) -> auto& { return c.train.env.healthgrid.decay_per_step; }));
    f.push_back(Field<int>("healthgrid.episode_len", FT::kInt, [](E& c) -> auto& { return c.train.env.healthgrid.episode_len; }));
    f.push_back(Field<int>("healthgrid.obs_window", FT::kInt, [](E& c) -> auto& { return c.train.env.healthgrid.obs_window; }));
    f.push_back(Field<double>("healthgrid.aux_kit_reward", FT::kReal, [](E& c) -> auto& { return c.train.env.healthgrid.aux_kit_reward; }));
    f.push_back(Field<double>("healthgrid.aux_poison_reward", FT::kReal, [](E& c) -> auto& { return c.train.env.healthgrid.aux_poison_reward; }));
    f.push_back(Field<bool>("healthgrid.time_feature", FT::kBool, [](E& c) -> auto& { return c.train.env.healthgrid.time_feature; }));
    f.push_back(Field<int>("chain.n_states", FT::kInt, [](E& c) -> auto& { return c.train.env.chain.n_states; }));
    f.push_back(Field<double>("chain.goal_reward", FT::kReal, [](E& c) -> auto& { return c.train.env.chain.goal_reward; }));
    f.push_back(Field<int>("chain.episode_cap", FT::kInt, [](E& c) -> auto& { return c.train.env.chain.episode_cap; }));
    return f;
  }();
  return fields;
}

namespace detail {

inline void FlattenInto(const json& obj, const std::string& prefix,
                        std::map<std::string, json>& out) {
  for (const auto& [key, value] : obj.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      FlattenInto(value, path, out);
    } else {
      out[path] = value;
    }
  }
}

}  // namespace detail

// Applies a (possibly nested) JSON object onto `cfg`. Unknown keys and values
// of the wrong form are rejected with the key named in the message.
inline void ApplyJson(ExperimentConfig& cfg, const json& obj) {
  if (!obj.is_object()) throw ConfigError("config must be a JSON object");
  std::map<std::string, json> flat;
  detail::FlattenInto(obj, "", flat);
  for (const auto& [key, value] : flat) {
    const ConfigField* field = nullptr;
    for (const auto& f : ConfigFields()) {
      if (f.key == key) field = &f;
    }
    if (field == nullptr) throw ConfigError("unknown config key '" + key + "'");
    if (!detail::Matches(field->type, value)) {
      throw ConfigError("config key '" + key + "' must be " +
                        detail::ExpectedForm(field->type) + ", got " + value.dump());
    }
    try {
      field->set(cfg, value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "' must be " +
                        detail::ExpectedForm(field->type) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

// Converts a command-line string into the JSON value for `key`.
inline json FlagValue(const ConfigField& field, const std::string& text) {
  auto fail = [&] {
    return ConfigError("flag for '" + field.key + "' must be " +
                       detail::ExpectedForm(field.type) + ", got '" + text + "'");
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) parts.push_back(item);
    }
    return parts;
  };
  switch (field.type) {
    case FieldType::kString:
    case FieldType::kLoss:
      return json(text);
    case FieldType::kStringList:
      return json(split(text));
    case FieldType::kIntList: {
      json arr = json::array();
      for (const auto& p : split(text)) {
        json v = json::parse(p, nullptr, false);
        if (!v.is_number_integer()) throw fail();
        arr.push_back(v);
      }
      return arr;
    }
    default: {
      json v = json::parse(text, nullptr, false);
      if (v.is_discarded()) throw fail();
      return v;
    }
  }
}

inline json ToJson(const ExperimentConfig& cfg) {
  json out = json::object();
  for (const auto& f : ConfigFields()) {
    out[json::json_pointer("/" + [&] {
      std::string p = f.key;
      for (auto& c : p) if (c == '.') c = '/';
      return p;
    }())] = f.get(cfg);
  }
  return out;
}

inline ExperimentConfig ParseConfigJson(const json& obj) {
  ExperimentConfig cfg;
  ApplyJson(cfg, obj);
  cfg.Validate();
  return cfg;
}

inline ExperimentConfig ParseConfigText(const std::string& text) {
  json obj = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  return ParseConfigJson(obj);
}

inline ExperimentConfig ParseConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfigText(ss.str());
}

// ---------------------------------------------------------------------------
// CSV output

// Shortest representation that parses back to the same double.
inline std::string FormatNumber(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct ResultRow {
  std::string ratio;
  int k = 0;
  double lr = 0.0;
  int seed = 0;
  double final_score = 0.0;
  double final_reward = 0.0;
  bool diverged = false;
};

inline constexpr const char* kResultsHeader =
    "ratio,k,lr,seed,final_score,final_reward,diverged";
inline constexpr const char* kCurveHeader = "env_step,mean_score,mean_reward,ema_score";
inline constexpr const char* kSummaryHeader = "ratio,k,lr,score,reward";

inline std::vector<ResultRow> ResultRows(const SweepResult& sweep) {
  std::vector<ResultRow> rows;
  for (const auto& run : sweep.runs) {
    rows.push_back({run.ratio.ToString(), run.k, run.lr, run.seed_index,
                    run.result.final_score, run.result.final_reward, run.result.diverged});
  }
  return rows;
}

inline std::string ResultsCsv(const SweepResult& sweep) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : ResultRows(sweep)) {
    out += r.ratio + "," + std::to_string(r.k) + "," + FormatNumber(r.lr) + "," +
           std::to_string(r.seed) + "," + FormatNumber(r.final_score) + "," +
           FormatNumber(r.final_reward) + "," + (r.diverged ? "true" : "false") + "\n";
  }
  return out;
}

// Rows are ratios, columns are k values; cells are seed-averaged final scores.
inline std::string HeatmapCsv(const SweepResult& sweep) {
  std::string out = "ratio";
  for (int k : sweep.k_values) out += "," + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < sweep.ratios.size(); ++i) {
    out += sweep.ratios[i].ToString();
    for (std::size_t j = 0; j < sweep.k_values.size(); ++j) {
      out += "," + FormatNumber(sweep.Score(i, j));
    }
    out += "\n";
  }
  return out;
}

// One row per ratio at its best learning rate.
inline std::string SummaryCsv(const SweepResult& sweep) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (std::size_t i = 0; i < sweep.ratios.size(); ++i) {
    const std::size_t j = sweep.best_k_index[i];
    const auto& cell = sweep.cells[i][j];
    out += sweep.ratios[i].ToString() + "," + std::to_string(sweep.k_values[j]) + "," +
           FormatNumber(LrForExponent(sweep.ratios[i], sweep.k_values[j])) + "," +
           FormatNumber(cell.score) + "," + FormatNumber(cell.reward) + "\n";
  }
  return out;
}

inline std::string CurveCsv(const EvalCurve& curve) {
  std::vector<double> scores;
  for (const auto& p : curve) scores.push_back(p.mean_score);
  const auto ema = EmaSmooth(scores);
  std::string out = std::string(kCurveHeader) + "\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += std::to_string(curve[i].env_step) + "," + FormatNumber(curve[i].mean_score) +
           "," + FormatNumber(curve[i].mean_reward) + "," + FormatNumber(ema[i]) + "\n";
  }
  return out;
}

inline std::string RunTag(const LearnRatio& ratio, int k, int seed_index) {
  return ratio.FileTag() + "_" + std::to_string(k) + "_" + std::to_string(seed_index);
}

// ---------------------------------------------------------------------------
// Running

// Creates the output tree and proves it is writable.
inline void PrepareOutputDir(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path root(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(root / "curves", ec);
  if (ec) throw IoError("cannot create " + (root / "curves").string() + ": " + ec.message());
  if (cfg.save_checkpoints) {
    fs::create_directories(root / "checkpoints", ec);
    if (ec) throw IoError("cannot create checkpoints directory: " + ec.message());
  }
  const fs::path probe = root / ".write_probe";
  WriteFileAtomic(probe, "ok\n");
  fs::remove(probe, ec);
}

using ProgressFn = std::function<void(const SweepRun&, std::size_t, std::size_t)>;

inline SweepResult RunExperiment(const ExperimentConfig& cfg, ProgressFn progress = {}) {
  namespace fs = std::filesystem;
  cfg.Validate();
  PrepareOutputDir(cfg);
  const fs::path root(cfg.output_dir);

  SweepOptions opts;
  opts.base_seed = cfg.base_seed;
  opts.parallelism = cfg.parallelism;
  opts.on_run_done = std::move(progress);
  if (cfg.save_checkpoints) {
    opts.on_agent_trained = [root](const SweepRun& run, const AgentState& agent) {
      SaveAgent(agent, root / "checkpoints" / (RunTag(run.ratio, run.k, run.seed_index) + ".ckpt"));
    };
  }
  SweepResult sweep = Sweep(cfg.train, cfg.ParsedRatios(), cfg.k_values, opts);

  for (const auto& run : sweep.runs) {
    WriteFileAtomic(root / "curves" / (RunTag(run.ratio, run.k, run.seed_index) + ".csv"),
                    CurveCsv(run.result.eval_curve));
  }
  WriteFileAtomic(root / "results.csv", ResultsCsv(sweep));
  WriteFileAtomic(root / "heatmap.csv", HeatmapCsv(sweep));
  WriteFileAtomic(root / "summary.csv", SummaryCsv(sweep));
  WriteFileAtomic(root / "config_used.json", ToJson(cfg).dump(2) + "\n");
  return sweep;
}

}  // namespace ratiodqn

#endif  // RATIODQN_HARNESS_HPP_
