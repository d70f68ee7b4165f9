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

#ifndef RATIODQN_ENVS_HPP_
#define RATIODQN_ENVS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ratiodqn/errors.hpp"
#include "ratiodqn/nn.hpp"

namespace ratiodqn {

struct StepInfo {
  int kits_taken = 0;
  int poisons_taken = 0;
};

struct StepResult {
  Vector obs;
  double reward = 0.0;
  double health_after = 0.0;
  // Episode ended in a way the value target must respect (death or the
  // HealthGrid time limit).
  bool terminal = false;
  // Episode was cut off without a terminal state; targets still bootstrap.
  bool truncated = false;
  int frames = 1;  // raw environment steps executed
  StepInfo info;

  bool episode_over() const { return terminal || truncated; }
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Vector Reset(std::uint64_t seed) = 0;
  virtual StepResult Step(int action) = 0;
  virtual int num_actions() const = 0;
  virtual int obs_dim() const = 0;
  virtual bool episode_over() const = 0;
  // Score of the episode played since the last Reset.
  virtual double EpisodeScore() const = 0;
};

// Change in health plus +/-100 per kit/poison picked up.
inline double ShapedReward(double health_delta, int kits, int poisons,
                           double aux_kit = 100.0, double aux_poison = -100.0) {
  return health_delta + aux_kit * kits + aux_poison * poisons;
}

// Mean health over a nominal-length episode; steps after death count as 0.
inline double EpisodeHealthScore(const std::vector<double>& health_trace,
                                 int nominal_len) {
  if (nominal_len <= 0) return 0.0;
  if (health_trace.size() > static_cast<std::size_t>(nominal_len)) {
    throw ContractError("health trace longer than the nominal episode length");
  }
  return std::accumulate(health_trace.begin(), health_trace.end(), 0.0) /
         nominal_len;
}

// ---------------------------------------------------------------------------
// HealthGrid

struct HealthGridConfig {
  int grid_size = 9;
  int n_kits = 4;
  int n_poisons = 3;
  double kit_heal = 25.0;
  double poison_damage = 30.0;
  double decay_per_step = 1.0;
  int episode_len = 200;
  int obs_window = 5;
  double aux_kit_reward = 100.0;
  double aux_poison_reward = -100.0;
  bool time_feature = false;

  bool operator==(const HealthGridConfig&) const = default;
};

enum class Cell : std::uint8_t { kEmpty, kWall, kKit, kPoison };

// Square arena with a wall border and a lattice of pillars at even interior
// coordinates. Items respawn at a random empty cell when picked up, so the
// number of kits and poisons never changes.
class HealthGrid final : public Environment {
 public:
  static constexpr double kMaxHealth = 100.0;
  enum Action { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

  explicit HealthGrid(HealthGridConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.grid_size < 3) throw ConfigError("healthgrid grid_size must be >= 3");
    if (cfg_.obs_window < 1 || cfg_.obs_window % 2 == 0) {
      throw ConfigError("healthgrid obs_window must be a positive odd integer");
    }
    if (!(cfg_.kit_heal > 0 && cfg_.poison_damage > 0 && cfg_.decay_per_step > 0)) {
      throw ConfigError("healthgrid kit_heal, poison_damage, decay_per_step must be > 0");
    }
    if (cfg_.n_kits < 0 || cfg_.n_poisons < 0 || cfg_.episode_len < 1) {
      throw ConfigError("healthgrid item counts must be >= 0 and episode_len >= 1");
    }
    const int n = cfg_.grid_size;
    layout_.assign(static_cast<std::size_t>(n * n), Cell::kEmpty);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const bool border = x == 0 || y == 0 || x == n - 1 || y == n - 1;
        const bool pillar = x % 2 == 0 && y % 2 == 0;
        if (border || pillar) layout_[Index(x, y)] = Cell::kWall;
      }
    }
    for (int i = 0; i < n * n; ++i) {
      if (layout_[static_cast<std::size_t>(i)] == Cell::kEmpty) free_cells_.push_back(i);
    }
    if (cfg_.n_kits + cfg_.n_poisons + 1 > static_cast<int>(free_cells_.size())) {
      throw ConfigError("healthgrid items do not fit on the grid");
    }
    cells_ = layout_;
  }

  const HealthGridConfig& config() const { return cfg_; }
  const std::vector<int>& free_cells() const { return free_cells_; }

  int num_actions() const override { return 4; }
  int obs_dim() const override {
    return 3 * cfg_.obs_window * cfg_.obs_window + 1 + (cfg_.time_feature ? 1 : 0);
  }
  bool episode_over() const override { return over_; }

  Vector Reset(std::uint64_t seed) override {
    rng_.seed(seed);
    cells_ = layout_;
    std::uniform_int_distribution<std::size_t> pick(0, free_cells_.size() - 1);
    agent_ = free_cells_[pick(rng_)];
    for (int i = 0; i < cfg_.n_kits; ++i) PlaceItem(Cell::kKit);
    for (int i = 0; i < cfg_.n_poisons; ++i) PlaceItem(Cell::kPoison);
    health_ = kMaxHealth;
    tick_ = 0;
    over_ = false;
    trace_.assign(1, health_);
    return Observe();
  }

  StepResult Step(int action) override {
    if (over_) throw ContractError("step called on a finished healthgrid episode");
    if (action < 0 || action >= num_actions()) {
      throw ContractError("healthgrid action out of range");
    }
    const int n = cfg_.grid_size;
    int x = agent_ % n;
    int y = agent_ / n;
    switch (action) {
      case kUp: --y; break;
      case kDown: ++y; break;
      case kLeft: --x; break;
      default: ++x; break;
    }
    if (cells_[Index(x, y)] != Cell::kWall) agent_ = static_cast<int>(Index(x, y));

    StepInfo info;
    double change = -cfg_.decay_per_step;
    Cell& here = cells_[static_cast<std::size_t>(agent_)];
    if (here == Cell::kKit) {
      info.kits_taken = 1;
      change += cfg_.kit_heal;
    } else if (here == Cell::kPoison) {
      info.poisons_taken = 1;
      change -= cfg_.poison_damage;
    }
    if (here == Cell::kKit || here == Cell::kPoison) {
      const Cell item = here;
      here = Cell::kEmpty;
      PlaceItem(item);
    }
    const double before = health_;
    health_ = std::clamp(health_ + change, 0.0, kMaxHealth);
    ++tick_;
    over_ = health_ <= 0.0 || tick_ >= cfg_.episode_len;
    if (!over_) trace_.push_back(health_);

    StepResult r;
    r.obs = Observe();
    r.health_after = health_;
    r.info = info;
    r.reward = ShapedReward(health_ - before, info.kits_taken, info.poisons_taken,
                            cfg_.aux_kit_reward, cfg_.aux_poison_reward);
    r.terminal = over_;
    return r;
  }

  double EpisodeScore() const override {
    return EpisodeHealthScore(trace_, cfg_.episode_len);
  }

  // Inspection helpers for tests and tools.
  double health() const { return health_; }
  int tick() const { return tick_; }
  int agent_cell() const { return agent_; }
  Cell cell(int x, int y) const { return cells_[Index(x, y)]; }
  int CountItems(Cell kind) const {
    return static_cast<int>(std::count(cells_.begin(), cells_.end(), kind));
  }
  const std::vector<double>& health_trace() const { return trace_; }

  // Test hooks: overwrite state without going through Reset's sampling.
  void SetHealth(double h) { health_ = h; }
  void SetAgent(int x, int y) { agent_ = static_cast<int>(Index(x, y)); }
  void SetCell(int x, int y, Cell c) { cells_[Index(x, y)] = c; }

 private:
  std::size_t Index(int x, int y) const {
    return static_cast<std::size_t>(y * cfg_.grid_size + x);
  }

  void PlaceItem(Cell item) {
    std::vector<int> empty;
    empty.reserve(free_cells_.size());
    for (int c : free_cells_) {
      if (c != agent_ && cells_[static_cast<std::size_t>(c)] == Cell::kEmpty) {
        empty.push_back(c);
      }
    }
    if (empty.empty()) return;
    std::uniform_int_distribution<std::size_t> pick(0, empty.size() - 1);
    cells_[static_cast<std::size_t>(empty[pick(rng_)])] = item;
  }

  // Channels (wall, kit, poison) of an egocentric window, then health / 100.
  Vector Observe() const {
    const int w = cfg_.obs_window;
    const int half = w / 2;
    const int n = cfg_.grid_size;
    const int ax = agent_ % n;
    const int ay = agent_ / n;
    Vector obs = Vector::Zero(obs_dim());
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        const int x = ax + dx;
        const int y = ay + dy;
        const int k = (dy + half) * w + (dx + half);
        Cell c = Cell::kWall;
        if (x >= 0 && y >= 0 && x < n && y < n) c = cells_[Index(x, y)];
        if (c == Cell::kWall) obs[k] = 1.0;
        if (c == Cell::kKit) obs[w * w + k] = 1.0;
        if (c == Cell::kPoison) obs[2 * w * w + k] = 1.0;
      }
    }
    obs[3 * w * w] = health_ / kMaxHealth;
    if (cfg_.time_feature) {
      obs[3 * w * w + 1] = static_cast<double>(cfg_.episode_len - tick_) / cfg_.episode_len;
    }
    return obs;
  }

  HealthGridConfig cfg_;
  std::vector<Cell> layout_;
  std::vector<Cell> cells_;
  std::vector<int> free_cells_;
  std::mt19937_64 rng_{0};
  int agent_ = 0;
  double health_ = kMaxHealth;
  int tick_ = 0;
  bool over_ = true;
  std::vector<double> trace_;
};

// ---------------------------------------------------------------------------
// ChainMDP

struct ChainConfig {
  int n_states = 5;
  double goal_reward = 1.0;
  int episode_cap = 50;

  bool operator==(const ChainConfig&) const = default;
};

// States 0..n-1 in a line; state n-1 is the absorbing goal. Action 0 moves
// left (state 0 stays put), action 1 moves right. Entering the goal pays
// goal_reward and ends the episode; every other step pays 0. Hitting the
// step cap truncates the episode without a terminal transition.
class ChainMDP final : public Environment {
 public:
  enum Action { kLeft = 0, kRight = 1 };

  struct Outcome {
    int next_state;
    double reward;
    bool terminal;
  };

  explicit ChainMDP(ChainConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.n_states < 2) throw ConfigError("chain needs at least 2 states");
    if (cfg_.episode_cap < 1) throw ConfigError("chain episode_cap must be >= 1");
  }

  const ChainConfig& config() const { return cfg_; }
  int n_states() const { return cfg_.n_states; }
  int goal() const { return cfg_.n_states - 1; }
  bool IsTerminal(int s) const { return s == goal(); }

  Outcome Transition(int s, int a) const {
    const int next = a == kRight ? s + 1 : std::max(s - 1, 0);
    const bool done = next == goal();
    return {next, done ? cfg_.goal_reward : 0.0, done};
  }

  Vector ObsFor(int s) const {
    Vector o = Vector::Zero(cfg_.n_states);
    o[s] = 1.0;
    return o;
  }

  int num_actions() const override { return 2; }
  int obs_dim() const override { return cfg_.n_states; }
  bool episode_over() const override { return over_; }

  // Episodes start in the leftmost state; the seed is unused.
  Vector Reset(std::uint64_t /*seed*/) override {
    state_ = 0;
    tick_ = 0;
    return_ = 0.0;
    over_ = false;
    return ObsFor(state_);
  }

  StepResult Step(int action) override {
    if (over_) throw ContractError("step called on a finished chain episode");
    if (action < 0 || action >= num_actions()) {
      throw ContractError("chain action out of range");
    }
    const Outcome o = Transition(state_, action);
    state_ = o.next_state;
    ++tick_;
    return_ += o.reward;
    StepResult r;
    r.obs = ObsFor(state_);
    r.reward = o.reward;
    r.terminal = o.terminal;
    r.truncated = !o.terminal && tick_ >= cfg_.episode_cap;
    over_ = r.terminal || r.truncated;
    return r;
  }

  // Undiscounted return.
  double EpisodeScore() const override { return return_; }

  int state() const { return state_; }

 private:
  ChainConfig cfg_;
  int state_ = 0;
  int tick_ = 0;
  double return_ = 0.0;
  bool over_ = true;
};

// Q*[s][a] for every state; rows for the goal state stay zero.
using QTable = std::vector<std::vector<double>>;

inline QTable ValueIteration(const ChainMDP& mdp, double discount,
                             double tolerance, int max_sweeps = 10'000) {
  const int n = mdp.n_states();
  const int n_actions = mdp.num_actions();
  QTable q(static_cast<std::size_t>(n), std::vector<double>(n_actions, 0.0));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (int s = 0; s < n; ++s) {
      if (mdp.IsTerminal(s)) continue;
      for (int a = 0; a < n_actions; ++a) {
        const auto o = mdp.Transition(s, a);
        double next_v = 0.0;
        if (!o.terminal) {
          const auto& row = q[static_cast<std::size_t>(o.next_state)];
          next_v = *std::max_element(row.begin(), row.end());
        }
        const double updated = o.reward + discount * next_v;
        auto& cell = q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
        change = std::max(change, std::abs(updated - cell));
        cell = updated;
      }
    }
    if (change < tolerance) break;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Frame skip

// Repeats each action k times (or until the episode ends), summing rewards
// and returning the final frame.
class FrameSkip final : public Environment {
 public:
  FrameSkip(std::unique_ptr<Environment> inner, int k)
      : inner_(std::move(inner)), k_(k) {
    if (k_ < 1) throw ConfigError("frame skip must be >= 1");
  }

  Vector Reset(std::uint64_t seed) override { return inner_->Reset(seed); }

  StepResult Step(int action) override {
    StepResult total;
    total.frames = 0;
    for (int i = 0; i < k_; ++i) {
      StepResult r = inner_->Step(action);
      total.reward += r.reward;
      total.info.kits_taken += r.info.kits_taken;
      total.info.poisons_taken += r.info.poisons_taken;
      total.obs = std::move(r.obs);
      total.health_after = r.health_after;
      total.terminal = r.terminal;
      total.truncated = r.truncated;
      ++total.frames;
      if (r.episode_over()) break;
    }
    return total;
  }

  int num_actions() const override { return inner_->num_actions(); }
  int obs_dim() const override { return inner_->obs_dim(); }
  bool episode_over() const override { return inner_->episode_over(); }
  double EpisodeScore() const override { return inner_->EpisodeScore(); }

  Environment& inner() { return *inner_; }
  int skip() const { return k_; }

 private:
  std::unique_ptr<Environment> inner_;
  int k_;
};

// ---------------------------------------------------------------------------
// Selection by name

struct EnvConfig {
  std::string name = "healthgrid";  // "healthgrid" or "chain"
  HealthGridConfig healthgrid;
  ChainConfig chain;
  int frame_skip = 1;

  bool operator==(const EnvConfig&) const = default;
};

inline std::unique_ptr<Environment> MakeEnvironment(const EnvConfig& cfg) {
  std::unique_ptr<Environment> env;
  if (cfg.name == "healthgrid") {
    env = std::make_unique<HealthGrid>(cfg.healthgrid);
  } else if (cfg.name == "chain") {
    env = std::make_unique<ChainMDP>(cfg.chain);
  } else {
    throw ConfigError("unknown environment '" + cfg.name +
                      "' (expected healthgrid or chain)");
  }
  if (cfg.frame_skip < 1) throw ConfigError("frame_skip must be >= 1");
  if (cfg.frame_skip == 1) return env;
  return std::make_unique<FrameSkip>(std::move(env), cfg.frame_skip);
}

}  // namespace ratiodqn

#endif  // RATIODQN_ENVS_HPP_
