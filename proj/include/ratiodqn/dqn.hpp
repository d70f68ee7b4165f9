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

#ifndef RATIODQN_DQN_HPP_
#define RATIODQN_DQN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ratiodqn/errors.hpp"
#include "ratiodqn/nn.hpp"
#include "ratiodqn/replay.hpp"

namespace ratiodqn {

// Linear anneal from `initial` to `final_value` over `anneal_steps`
// environment steps, then constant.
struct EpsilonSchedule {
  double initial = 1.0;
  double final_value = 0.1;
  std::int64_t anneal_steps = 1;

  double At(std::int64_t env_step) const {
    if (anneal_steps <= 0 || env_step >= anneal_steps) return final_value;
    const double frac = static_cast<double>(std::max<std::int64_t>(env_step, 0)) /
                        static_cast<double>(anneal_steps);
    return initial + (final_value - initial) * frac;
  }
};

enum class LossKind { kMse, kHuber };

struct AgentOptions {
  double discount = 1.0;
  std::int64_t target_sync_period = 1'000;  // in learning steps
  LossKind loss = LossKind::kMse;
  double rms_smoothing = 0.95;
  double rms_epsilon = 1e-6;
};

struct AgentState {
  Network online;
  Network target;
  RMSPropState optimizer;
  std::int64_t learn_steps_done = 0;
  std::int64_t target_sync_period = 1'000;
  double discount = 1.0;
  LossKind loss = LossKind::kMse;

  static AgentState Create(const NetworkSpec& spec, std::uint64_t seed,
                           const AgentOptions& opts = {}) {
    if (opts.target_sync_period < 1) {
      throw ConfigError("target sync period must be positive");
    }
    if (!(opts.discount >= 0.0 && opts.discount <= 1.0)) {
      throw ConfigError("discount must lie in [0, 1]");
    }
    AgentState a;
    a.online = InitNetwork(spec, seed);
    a.target = a.online;
    a.optimizer = RMSPropState::For(a.online, opts.rms_smoothing, opts.rms_epsilon);
    a.target_sync_period = opts.target_sync_period;
    a.discount = opts.discount;
    a.loss = opts.loss;
    return a;
  }

  int num_actions() const { return online.spec.output_dim; }

  bool operator==(const AgentState&) const = default;
};

inline void SyncTarget(AgentState& agent) { agent.target.params = agent.online.params; }

// Lowest index wins ties.
inline int GreedyAction(const Vector& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

// Epsilon-greedy. Always consumes one uniform draw so the rng stream does not
// depend on epsilon; a second draw picks the random action when exploring.
inline int SelectAction(const AgentState& agent, const Vector& obs,
                        double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, agent.num_actions() - 1);
    return pick(rng);
  }
  return GreedyAction(ForwardOne(agent.online, obs));
}

// y = r + discount * max_a' Q_target(s', a') for non-terminal rows, y = r for
// terminal rows.
inline Vector TdTargets(const Vector& rewards, std::span<const char> terminal,
                        const Matrix& next_obs, const Network& target_net,
                        double discount) {
  const Matrix next_q = Forward(target_net, next_obs);
  if (!next_q.allFinite()) {
    throw NumericError("target network produced non-finite Q-values");
  }
  Vector y(rewards.size());
  for (Eigen::Index i = 0; i < rewards.size(); ++i) {
    y[i] = terminal[i] ? rewards[i] : rewards[i] + discount * next_q.row(i).maxCoeff();
  }
  return y;
}

inline Vector ComputeTdTargets(std::span<const Transition> batch,
                               const Network& target_net, double discount) {
  if (batch.empty()) throw ContractError("TD targets need a non-empty batch");
  const auto dim = batch.front().next_obs.size();
  Matrix next(static_cast<Eigen::Index>(batch.size()), dim);
  Vector rewards(static_cast<Eigen::Index>(batch.size()));
  std::vector<char> term(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    next.row(static_cast<Eigen::Index>(i)) = batch[i].next_obs.transpose();
    rewards[static_cast<Eigen::Index>(i)] = batch[i].reward;
    term[i] = batch[i].terminal ? 1 : 0;
  }
  return TdTargets(rewards, term, next, target_net, discount);
}

struct LossAndGrad {
  double loss = 0.0;
  Matrix upstream;  // dLoss/dQ, non-zero only at taken actions
};

// Loss over the taken actions only. MSE is mean((q - y)^2); Huber uses
// threshold 1 and the same 1/B normalization.
inline LossAndGrad TdLoss(const Matrix& q, std::span<const int> actions,
                          const Vector& targets, LossKind kind) {
  const auto batch = q.rows();
  LossAndGrad out{0.0, Matrix::Zero(q.rows(), q.cols())};
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    const double d = q(i, a) - targets[i];
    if (kind == LossKind::kMse) {
      out.loss += d * d * inv_b;
      out.upstream(i, a) = 2.0 * d * inv_b;
    } else {
      const double ad = std::abs(d);
      out.loss += (ad <= 1.0 ? 0.5 * d * d : ad - 0.5) * inv_b;
      out.upstream(i, a) = std::clamp(d, -1.0, 1.0) * inv_b;
    }
  }
  return out;
}

// One minibatch update of the online network. Syncs the target network after
// the update whenever learn_steps_done reaches a multiple of the sync period.
inline double LearnStep(AgentState& agent, const ReplayBuffer& buffer,
                        std::size_t batch_size, double lr, std::mt19937_64& rng) {
  const auto idx = buffer.SampleIndices(batch_size, rng);
  const auto b = static_cast<Eigen::Index>(batch_size);
  const auto dim = buffer[idx.front()].obs.size();
  if (dim != agent.online.spec.input_dim) {
    throw ShapeError("replay observations do not match network input");
  }
  Matrix obs(b, dim);
  Matrix next(b, dim);
  Vector rewards(b);
  std::vector<char> term(batch_size);
  std::vector<int> actions(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const Transition& t = buffer[idx[i]];
    const auto r = static_cast<Eigen::Index>(i);
    obs.row(r) = t.obs.transpose();
    next.row(r) = t.next_obs.transpose();
    rewards[r] = t.reward;
    term[i] = t.terminal ? 1 : 0;
    actions[i] = t.action;
  }
  const Vector y = TdTargets(rewards, term, next, agent.target, agent.discount);
  const ForwardCache cache = ForwardWithCache(agent.online, obs);
  const LossAndGrad lg = TdLoss(cache.post.back(), actions, y, agent.loss);
  if (!std::isfinite(lg.loss)) throw NumericError("non-finite TD loss");
  const GradientBuffer grads = BackwardFromCache(agent.online, cache, lg.upstream);
  RmspropStep(agent.online, grads, agent.optimizer, lr);
  ++agent.learn_steps_done;
  if (agent.learn_steps_done % agent.target_sync_period == 0) SyncTarget(agent);
  return lg.loss;
}

}  // namespace ratiodqn

#endif  // RATIODQN_DQN_HPP_
