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

#ifndef RATIODQN_EVAL_HPP_
#define RATIODQN_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "ratiodqn/dqn.hpp"
#include "ratiodqn/envs.hpp"
#include "ratiodqn/errors.hpp"

namespace ratiodqn {

struct EvalPoint {
  std::int64_t env_step = 0;
  double mean_score = 0.0;
  // Cumulative shaped reward per episode, averaged over the evaluation episodes.
  double mean_reward = 0.0;

  bool operator==(const EvalPoint&) const = default;
};

using EvalCurve = std::vector<EvalPoint>;

// Plays n_episodes greedy episodes, episode i seeded with base_seed + i.
// The agent is only read.
inline EvalPoint RunEval(const AgentState& agent, Environment& env,
                         int n_episodes, std::uint64_t base_seed) {
  if (n_episodes < 1) throw ContractError("evaluation needs at least one episode");
  if (env.obs_dim() != agent.online.spec.input_dim) {
    throw ShapeError("environment observation size does not match the agent");
  }
  double score_sum = 0.0;
  double reward_sum = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    Vector obs = env.Reset(base_seed + static_cast<std::uint64_t>(i));
    double episode_reward = 0.0;
    while (!env.episode_over()) {
      const int a = GreedyAction(ForwardOne(agent.online, obs));
      StepResult r = env.Step(a);
      episode_reward += r.reward;
      obs = std::move(r.obs);
    }
    score_sum += env.EpisodeScore();
    reward_sum += episode_reward;
  }
  return {0, score_sum / n_episodes, reward_sum / n_episodes};
}

inline EvalPoint RunEval(const AgentState& agent,
                         const std::function<std::unique_ptr<Environment>()>& env_factory,
                         int n_episodes, std::uint64_t base_seed) {
  auto env = env_factory();
  return RunEval(agent, *env, n_episodes, base_seed);
}

// s_0 = x_0, s_t = smoothing * s_{t-1} + (1 - smoothing) * x_t.
inline std::vector<double> EmaSmooth(std::span<const double> values,
                                     double smoothing = 0.8) {
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ContractError("EMA smoothing must lie in [0, 1)");
  }
  std::vector<double> out;
  out.reserve(values.size());
  // x + e(s - x) is the usual e*s + (1-e)*x rearranged; it rounds exactly
  // on short hand-checkable inputs where 1-e would not.
  for (double x : values) {
    out.push_back(out.empty() ? x : x + smoothing * (out.back() - x));
  }
  return out;
}

struct ScoreReduction {
  double value = 0.0;
  bool empty = false;  // input had no points; value is 0 by definition
};

// Mean of the ceil(10%) largest values.
inline ScoreReduction TopDecileMean(std::span<const double> values) {
  if (values.empty()) return {0.0, true};
  std::vector<double> sorted(values.begin(), values.end());
  const auto keep = static_cast<std::size_t>(
      std::ceil(0.1 * static_cast<double>(sorted.size()) - 1e-12));
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep),
                    sorted.end(), std::greater<>());
  const double sum = std::accumulate(
      sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep), 0.0);
  return {sum / static_cast<double>(keep), false};
}

struct FinalFromCurve {
  double score = 0.0;
  double reward = 0.0;
  bool empty = false;
};

// EMA(0.8) then top-10% mean, applied separately to scores and rewards.
inline FinalFromCurve ReduceCurve(const EvalCurve& curve, double smoothing = 0.8) {
  std::vector<double> scores;
  std::vector<double> rewards;
  for (const auto& p : curve) {
    scores.push_back(p.mean_score);
    rewards.push_back(p.mean_reward);
  }
  const auto s = TopDecileMean(EmaSmooth(scores, smoothing));
  const auto r = TopDecileMean(EmaSmooth(rewards, smoothing));
  return {s.value, r.value, s.empty};
}

struct SeedScore {
  std::uint64_t seed = 0;
  double score = 0.0;
  double reward = 0.0;
};

struct FinalScore {
  double score = 0.0;
  double reward = 0.0;
  std::vector<SeedScore> per_seed;
};

inline FinalScore AggregateSeeds(std::span<const SeedScore> results) {
  if (results.empty()) throw ContractError("cannot aggregate zero seeds");
  FinalScore f;
  f.per_seed.assign(results.begin(), results.end());
  // Summed in sorted order so the mean does not depend on seed order.
  std::vector<double> scores;
  std::vector<double> rewards;
  for (const auto& r : results) {
    scores.push_back(r.score);
    rewards.push_back(r.reward);
  }
  std::sort(scores.begin(), scores.end());
  std::sort(rewards.begin(), rewards.end());
  const auto n = static_cast<double>(results.size());
  f.score = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  f.reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  return f;
}

}  // namespace ratiodqn

#endif  // RATIODQN_EVAL_HPP_
