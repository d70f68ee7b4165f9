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

#ifndef RATIODQN_TRAINER_HPP_
#define RATIODQN_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ratiodqn/dqn.hpp"
#include "ratiodqn/envs.hpp"
#include "ratiodqn/errors.hpp"
#include "ratiodqn/eval.hpp"
#include "ratiodqn/ratio.hpp"
#include "ratiodqn/replay.hpp"

namespace ratiodqn {

struct TrainConfig {
  EnvConfig env;
  std::vector<int> hidden_layers{128, 128};
  std::int64_t total_env_steps = 50'000;
  int batch_size = 32;
  int buffer_capacity = 10'000;
  std::int64_t target_sync = 1'000;  // learning steps
  double discount = 1.0;
  double epsilon_initial = 1.0;
  double epsilon_final = 0.1;
  // Share of total_env_steps over which epsilon anneals linearly.
  double epsilon_anneal_fraction = 0.1;
  LearnRatio learn_ratio{1, 1};
  double learning_rate = 5e-5;
  int warmup_transitions = 1'000;
  std::int64_t eval_period = 5'000;
  int eval_episodes = 25;
  std::uint64_t eval_seed = 1'000'000;
  LossKind loss = LossKind::kMse;
  double reward_scale = 0.01;  // applied to rewards stored in replay only
  double rms_smoothing = 0.95;
  double rms_epsilon = 1e-6;
  std::vector<int> seeds{0, 1, 2, 3, 4};

  void Validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    require(total_env_steps >= 0, "total_env_steps must be >= 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(buffer_capacity >= batch_size, "buffer_capacity must be >= batch_size");
    require(target_sync >= 1, "target_sync must be >= 1");
    require(discount >= 0.0 && discount <= 1.0, "discount must lie in [0, 1]");
    require(epsilon_initial >= epsilon_final && epsilon_final >= 0.0 &&
                epsilon_initial <= 1.0,
            "epsilon must satisfy 1 >= epsilon_initial >= epsilon_final >= 0");
    require(epsilon_anneal_fraction >= 0.0 && epsilon_anneal_fraction <= 1.0,
            "epsilon_anneal_fraction must lie in [0, 1]");
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(warmup_transitions >= 0, "warmup_transitions must be >= 0");
    require(eval_period >= 1, "eval_period must be >= 1");
    require(eval_episodes >= 1, "eval_episodes must be >= 1");
    require(rms_smoothing > 0.0 && rms_smoothing < 1.0, "rms_smoothing must lie in (0, 1)");
    require(rms_epsilon > 0.0, "rms_epsilon must be > 0");
    require(std::isfinite(reward_scale) && reward_scale > 0.0, "reward_scale must be > 0");
    for (int w : hidden_layers) require(w >= 1, "hidden layer widths must be >= 1");
  }

  EpsilonSchedule Epsilon() const {
    return {epsilon_initial, epsilon_final,
            static_cast<std::int64_t>(epsilon_anneal_fraction *
                                      static_cast<double>(total_env_steps))};
  }

  NetworkSpec Network(int obs_dim, int num_actions) const {
    NetworkSpec spec{obs_dim, {}, num_actions};
    for (int w : hidden_layers) spec.hidden_layers.push_back({w});
    return spec;
  }

  AgentOptions Agent() const {
    return {discount, target_sync, loss, rms_smoothing, rms_epsilon};
  }
};

struct RunResult {
  EvalCurve eval_curve;
  double final_score = 0.0;
  double final_reward = 0.0;
  bool diverged = false;
  std::string failure;  // why the run diverged or failed, empty otherwise
  std::int64_t env_steps = 0;
  std::int64_t learn_updates = 0;
  std::uint64_t seed = 0;
  TrainConfig config;
};

// Independent generator streams for one run.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Everything a training run carries from one environment step to the next.
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::uint64_t seed)
      : config_((config.Validate(), config)),
        seed_(seed),
        env_(MakeEnvironment(config.env)),
        eval_env_(MakeEnvironment(config.env)),
        buffer_(static_cast<std::size_t>(config.buffer_capacity)),
        scheduler_(config.learn_ratio),
        epsilon_(config.Epsilon()),
        action_rng_(DeriveSeed(seed, 2)),
        sample_rng_(DeriveSeed(seed, 3)),
        episode_seed_base_(DeriveSeed(seed, 4)) {
    agent_ = AgentState::Create(config_.Network(env_->obs_dim(), env_->num_actions()),
                                DeriveSeed(seed, 1), config_.Agent());
    obs_ = env_->Reset(episode_seed_base_);
  }

  // Runs one environment step followed by its scheduled learning updates and,
  // on an evaluation boundary, an evaluation. Throws NumericError on divergence.
  void StepOnce() {
    const double eps = epsilon_.At(env_steps_);
    const int action = SelectAction(agent_, obs_, eps, action_rng_);
    StepResult r = env_->Step(action);
    buffer_.Push({obs_, action, r.reward * config_.reward_scale, r.obs, r.terminal});
    obs_ = std::move(r.obs);
    if (r.episode_over()) {
      ++episodes_;
      obs_ = env_->Reset(episode_seed_base_ + episodes_);
    }
    ++env_steps_;
    const int updates = scheduler_.Step();
    const auto held = static_cast<std::int64_t>(buffer_.size());
    if (held > config_.warmup_transitions && held >= config_.batch_size) {
      for (int i = 0; i < updates; ++i) {
        last_loss_ = LearnStep(agent_, buffer_, static_cast<std::size_t>(config_.batch_size),
                               config_.learning_rate, sample_rng_);
        ++learn_updates_;
      }
    }
    if (env_steps_ % config_.eval_period == 0) {
      EvalPoint p = RunEval(agent_, *eval_env_, config_.eval_episodes, config_.eval_seed);
      p.env_step = env_steps_;
      curve_.push_back(p);
    }
  }

  RunResult Run() {
    RunResult out;
    try {
      while (env_steps_ < config_.total_env_steps) StepOnce();
      const auto reduced = ReduceCurve(curve_);
      out.final_score = reduced.score;
      out.final_reward = reduced.reward;
    } catch (const NumericError& e) {
      out.diverged = true;
      out.failure = "diverged at env step " + std::to_string(env_steps_) + ": " + e.what();
    }
    out.eval_curve = curve_;
    out.env_steps = env_steps_;
    out.learn_updates = learn_updates_;
    out.seed = seed_;
    out.config = config_;
    return out;
  }

  const AgentState& agent() const { return agent_; }
  AgentState& agent() { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t learn_updates() const { return learn_updates_; }
  double last_loss() const { return last_loss_; }
  const EvalCurve& curve() const { return curve_; }

 private:
  TrainConfig config_;
  std::uint64_t seed_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<Environment> eval_env_;
  AgentState agent_;
  ReplayBuffer buffer_;
  UpdateScheduler scheduler_;
  EpsilonSchedule epsilon_;
  std::mt19937_64 action_rng_;
  std::mt19937_64 sample_rng_;
  std::uint64_t episode_seed_base_;
  Vector obs_;
  std::int64_t env_steps_ = 0;
  std::int64_t learn_updates_ = 0;
  std::uint64_t episodes_ = 0;
  double last_loss_ = 0.0;
  EvalCurve curve_;
};

// Fully determined by (config, seed). A diverged run scores 0 and is flagged.
inline RunResult TrainRun(const TrainConfig& config, std::uint64_t seed) {
  return Trainer(config, seed).Run();
}

inline SeedScore ToSeedScore(const RunResult& r) {
  return {r.seed, r.final_score, r.final_reward};
}

// ---------------------------------------------------------------------------
// Sweeps

// FNV-1a; stable across platforms and builds.
inline std::uint64_t StableHash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Depends only on its own (ratio, k, seed index), so adding cells to a sweep
// never changes the seeds of existing ones.
inline std::uint64_t RunSeed(std::uint64_t base_seed, const LearnRatio& ratio,
                             int k, int seed_index) {
  const std::string key = ratio.ToString() + "|" + std::to_string(k) + "|" +
                          std::to_string(seed_index);
  return base_seed + (StableHash(key) & 0x7fffffffULL);
}

struct SweepRun {
  LearnRatio ratio;
  int k = 0;
  double lr = 0.0;
  int seed_index = 0;
  std::uint64_t run_seed = 0;
  RunResult result;
};

struct SweepResult {
  std::vector<LearnRatio> ratios;
  std::vector<int> k_values;  // ascending
  std::vector<SweepRun> runs;  // ratio-major, then k, then seed
  // [ratio][k] seed-averaged final scores and rewards.
  std::vector<std::vector<FinalScore>> cells;
  std::vector<std::size_t> best_k_index;  // per ratio

  double Score(std::size_t ratio_i, std::size_t k_i) const {
    return cells[ratio_i][k_i].score;
  }
};

// First maximum wins, so ties go to the smaller learning rate.
inline std::size_t ArgmaxFirst(std::span<const double> row) {
  if (row.empty()) throw ContractError("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

struct SweepOptions {
  std::uint64_t base_seed = 0;
  int parallelism = 1;
  std::function<void(const SweepRun&, std::size_t done, std::size_t total)> on_run_done;
  // Called from the worker thread with the agent as it stood when the run ended.
  std::function<void(const SweepRun&, const AgentState&)> on_agent_trained;
};

inline SweepResult Sweep(const TrainConfig& base, std::vector<LearnRatio> ratios,
                         std::vector<int> k_values, const SweepOptions& opts = {}) {
  if (ratios.empty() || k_values.empty() || base.seeds.empty()) {
    throw ConfigError("sweep needs at least one ratio, k value and seed");
  }
  base.Validate();
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());

  SweepResult out;
  out.ratios = ratios;
  out.k_values = k_values;
  for (const auto& ratio : ratios) {
    for (int k : k_values) {
      for (int s : base.seeds) {
        SweepRun run;
        run.ratio = ratio;
        run.k = k;
        run.lr = LrForExponent(ratio, k);
        run.seed_index = s;
        run.run_seed = RunSeed(opts.base_seed, ratio, k, s);
        out.runs.push_back(std::move(run));
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex report_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < out.runs.size(); i = next++) {
      SweepRun& run = out.runs[i];
      TrainConfig cfg = base;
      cfg.learn_ratio = run.ratio;
      cfg.learning_rate = run.lr;
      try {
        Trainer trainer(cfg, run.run_seed);
        run.result = trainer.Run();
        if (opts.on_agent_trained) opts.on_agent_trained(run, trainer.agent());
      } catch (const std::exception& e) {
        run.result = RunResult{};
        run.result.diverged = true;
        run.result.failure = e.what();
        run.result.seed = run.run_seed;
        run.result.config = cfg;
      }
      std::lock_guard lock(report_mu);
      ++done;
      if (opts.on_run_done) opts.on_run_done(run, done, out.runs.size());
    }
  };
  const int threads = std::clamp<int>(opts.parallelism, 1,
                                      static_cast<int>(out.runs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const std::size_t n_seeds = base.seeds.size();
  std::size_t r_i = 0;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    std::vector<FinalScore> row;
    std::vector<double> scores;
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
      std::vector<SeedScore> seeds;
      for (std::size_t si = 0; si < n_seeds; ++si) {
        seeds.push_back(ToSeedScore(out.runs[r_i++].result));
      }
      row.push_back(AggregateSeeds(seeds));
      scores.push_back(row.back().score);
    }
    out.best_k_index.push_back(ArgmaxFirst(scores));
    out.cells.push_back(std::move(row));
  }
  return out;
}

}  // namespace ratiodqn

#endif  // RATIODQN_TRAINER_HPP_
