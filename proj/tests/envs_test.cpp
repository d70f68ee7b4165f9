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

#include "ratiodqn/envs.hpp"

#include <map>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace ratiodqn {
namespace {

// Empties every item cell so a test can place its own.
void ClearItems(HealthGrid& g) {
  const int n = g.config().grid_size;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (g.cell(x, y) == Cell::kKit || g.cell(x, y) == Cell::kPoison) g.SetCell(x, y, Cell::kEmpty);
    }
  }
}

TEST(ShapedReward, Formula) {
  EXPECT_EQ(ShapedReward(0, 0, 0), 0.0);
  EXPECT_EQ(ShapedReward(24, 1, 0), 124.0);
  EXPECT_EQ(ShapedReward(-31, 0, 1), -131.0);
}

TEST(EpisodeHealthScore, Cases) {
  EXPECT_EQ(EpisodeHealthScore({}, 200), 0.0);
  EXPECT_EQ(EpisodeHealthScore(std::vector<double>(200, 100.0), 200), 100.0);
  std::vector<double> idle;
  for (int h = 100; h >= 1; --h) idle.push_back(h);
  EXPECT_EQ(EpisodeHealthScore(idle, 200), 25.25);
  EXPECT_THROW(EpisodeHealthScore(std::vector<double>(201, 1.0), 200), ContractError);
}

TEST(HealthGrid, ResetIsDeterministicAndFullHealth) {
  HealthGrid a;
  HealthGrid b;
  EXPECT_EQ(a.Reset(17), b.Reset(17));
  EXPECT_EQ(a.health(), 100.0);
  EXPECT_EQ(a.obs_dim(), 76);
  EXPECT_EQ(a.CountItems(Cell::kKit), 4);
  EXPECT_EQ(a.CountItems(Cell::kPoison), 3);
}

TEST(HealthGrid, StartCellsAreUniform) {
  HealthGrid g;
  std::map<int, long> hits;
  for (int seed = 0; seed < 10'000; ++seed) {
    g.Reset(static_cast<std::uint64_t>(seed));
    ++hits[g.agent_cell()];
  }
  std::vector<long> counts;
  for (int c : g.free_cells()) counts.push_back(hits[c]);
  EXPECT_EQ(counts.size(), 40u);
  EXPECT_GT(testing::ChiSquareUniformPValue(counts), 0.01);
}

TEST(HealthGrid, WallMoveIsPureDecay) {
  HealthGrid g;
  g.Reset(1);
  ClearItems(g);
  g.SetAgent(1, 1);
  g.SetHealth(50);
  const StepResult r = g.Step(HealthGrid::kUp);  // (1,0) is border wall
  EXPECT_EQ(g.agent_cell(), 1 * 9 + 1);
  EXPECT_EQ(r.health_after, 49.0);
  EXPECT_EQ(r.reward, -1.0);
  EXPECT_FALSE(r.terminal);
}

TEST(HealthGrid, KitPickup) {
  HealthGrid g;
  g.Reset(2);
  ClearItems(g);
  g.SetAgent(1, 1);
  g.SetCell(1, 2, Cell::kKit);
  g.SetHealth(50);
  const StepResult r = g.Step(HealthGrid::kDown);
  EXPECT_EQ(r.health_after, 74.0);
  EXPECT_EQ(r.reward, 124.0);
  EXPECT_EQ(r.info.kits_taken, 1);
  EXPECT_EQ(g.CountItems(Cell::kKit), 1);  // respawned elsewhere
  EXPECT_NE(g.cell(1, 2), Cell::kKit);
}

TEST(HealthGrid, PoisonKillsAtLowHealth) {
  HealthGrid g;
  g.Reset(3);
  ClearItems(g);
  g.SetAgent(1, 1);
  g.SetCell(2, 1, Cell::kPoison);
  g.SetHealth(20);
  const StepResult r = g.Step(HealthGrid::kRight);
  EXPECT_EQ(r.health_after, 0.0);
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.reward, -120.0);
  EXPECT_EQ(r.info.poisons_taken, 1);
  EXPECT_THROW(g.Step(HealthGrid::kLeft), ContractError);
}

TEST(HealthGrid, HealthCapAtHundred) {
  HealthGrid g;
  g.Reset(4);
  ClearItems(g);
  g.SetAgent(1, 1);
  g.SetCell(1, 2, Cell::kKit);
  const StepResult r = g.Step(HealthGrid::kDown);
  EXPECT_EQ(r.health_after, 100.0);
  EXPECT_EQ(r.reward, 100.0);
}

TEST(HealthGrid, IdleEpisodeScores2525) {
  HealthGrid g;
  g.Reset(5);
  ClearItems(g);
  g.SetAgent(1, 1);
  int steps = 0;
  while (!g.episode_over()) {
    g.Step(HealthGrid::kUp);
    ++steps;
  }
  EXPECT_EQ(steps, 100);
  EXPECT_EQ(g.EpisodeScore(), 25.25);
}

TEST(HealthGrid, TimeLimitEndsEpisode) {
  HealthGridConfig cfg;
  cfg.decay_per_step = 0.1;
  HealthGrid g(cfg);
  g.Reset(6);
  ClearItems(g);
  g.SetAgent(1, 1);
  StepResult r;
  int steps = 0;
  while (!g.episode_over()) {
    r = g.Step(HealthGrid::kUp);
    ++steps;
  }
  EXPECT_EQ(steps, 200);
  EXPECT_TRUE(r.terminal);
  EXPECT_GT(r.health_after, 0.0);
  EXPECT_EQ(g.health_trace().size(), 200u);
}

// Random-policy rollouts checking the per-step invariants.
TEST(HealthGrid, RandomPlayInvariants) {
  HealthGrid g;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> act(0, 3);
  for (int ep = 0; ep < 50; ++ep) {
    Vector obs = g.Reset(static_cast<std::uint64_t>(ep));
    double health = g.health();
    while (!g.episode_over()) {
      const StepResult r = g.Step(act(rng));
      ASSERT_GE(r.health_after, 0.0);
      ASSERT_LE(r.health_after, 100.0);
      ASSERT_EQ(g.CountItems(Cell::kKit), 4);
      ASSERT_EQ(g.CountItems(Cell::kPoison), 3);
      ASSERT_EQ(r.obs.size(), obs.size());
      ASSERT_EQ(r.reward, ShapedReward(r.health_after - health, r.info.kits_taken, r.info.poisons_taken));
      const int ax = g.agent_cell() % 9;
      const int ay = g.agent_cell() / 9;
      ASSERT_NE(g.cell(ax, ay), Cell::kWall);
      ASSERT_EQ(r.terminal, r.health_after == 0.0 || g.tick() == 200);
      health = r.health_after;
    }
  }
}

TEST(HealthGrid, ObservationEncodesWindowAndHealth) {
  HealthGrid g;
  g.Reset(7);
  ClearItems(g);
  g.SetAgent(1, 1);
  g.SetCell(2, 1, Cell::kKit);
  g.SetCell(1, 3, Cell::kPoison);
  g.SetHealth(61);
  const Vector obs = g.Step(HealthGrid::kUp).obs;  // blocked, stays at (1,1)
  const int w = 5;
  auto at = [&](int channel, int dx, int dy) { return obs[channel * w * w + (dy + 2) * w + (dx + 2)]; };
  EXPECT_EQ(at(0, 0, -1), 1.0);   // border above
  EXPECT_EQ(at(0, -2, 0), 1.0);   // outside the grid counts as wall
  EXPECT_EQ(at(0, 1, 1), 1.0);    // pillar at (2,2)
  EXPECT_EQ(at(0, 0, 0), 0.0);
  EXPECT_EQ(at(1, 1, 0), 1.0);    // kit to the right
  EXPECT_EQ(at(2, 0, 2), 1.0);    // poison two below
  EXPECT_DOUBLE_EQ(obs[75], 0.60);
}

TEST(HealthGrid, RejectsBadConfig) {
  HealthGridConfig even;
  even.obs_window = 4;
  EXPECT_THROW(HealthGrid{even}, ConfigError);
  HealthGridConfig crowded;
  crowded.grid_size = 5;
  crowded.n_kits = 10;
  EXPECT_THROW(HealthGrid{crowded}, ConfigError);
}

TEST(FrameSkip, OneIsIdentity) {
  FrameSkip wrapped(std::make_unique<HealthGrid>(), 1);
  HealthGrid raw;
  EXPECT_EQ(wrapped.Reset(9), raw.Reset(9));
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> act(0, 3);
  while (!raw.episode_over()) {
    const int a = act(rng);
    const StepResult x = wrapped.Step(a);
    const StepResult y = raw.Step(a);
    ASSERT_EQ(x.obs, y.obs);
    ASSERT_EQ(x.reward, y.reward);
    ASSERT_EQ(x.terminal, y.terminal);
  }
  EXPECT_EQ(wrapped.EpisodeScore(), raw.EpisodeScore());
}

TEST(FrameSkip, TenDecayStepsFromFullHealth) {
  auto inner = std::make_unique<HealthGrid>();
  HealthGrid* g = inner.get();
  FrameSkip wrapped(std::move(inner), 10);
  wrapped.Reset(10);
  ClearItems(*g);
  g->SetAgent(1, 1);
  const StepResult r = wrapped.Step(HealthGrid::kUp);
  EXPECT_EQ(r.frames, 10);
  EXPECT_EQ(r.reward, -10.0);
  EXPECT_EQ(r.health_after, 90.0);
}

TEST(FrameSkip, StopsAtTerminal) {
  auto inner = std::make_unique<HealthGrid>();
  HealthGrid* g = inner.get();
  FrameSkip wrapped(std::move(inner), 10);
  wrapped.Reset(11);
  ClearItems(*g);
  g->SetAgent(1, 1);
  g->SetHealth(3);
  const StepResult r = wrapped.Step(HealthGrid::kUp);
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.frames, 3);
  EXPECT_EQ(g->tick(), 3);
}

TEST(ChainMDP, WalksRightToGoal) {
  ChainMDP c;
  c.Reset(0);
  StepResult r;
  for (int i = 0; i < 4; ++i) r = c.Step(ChainMDP::kRight);
  EXPECT_TRUE(r.terminal);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_EQ(c.EpisodeScore(), 1.0);
}

TEST(ChainMDP, CapTruncatesWithoutTerminal) {
  ChainMDP c;
  c.Reset(0);
  StepResult r;
  for (int i = 0; i < 50; ++i) r = c.Step(ChainMDP::kLeft);
  EXPECT_TRUE(r.truncated);
  EXPECT_FALSE(r.terminal);
  EXPECT_TRUE(c.episode_over());
  EXPECT_EQ(c.EpisodeScore(), 0.0);
}

TEST(ValueIteration, ChainOptimalValues) {
  const ChainMDP mdp;
  const QTable q = ValueIteration(mdp, 1.0, 1e-12);
  EXPECT_EQ(q[3][ChainMDP::kRight], 1.0);
  for (int s = 0; s < 4; ++s) EXPECT_EQ(q[static_cast<std::size_t>(s)][ChainMDP::kRight], 1.0);
}

TEST(ValueIteration, ZeroDiscountGivesImmediateRewards) {
  const ChainMDP mdp;
  const QTable q = ValueIteration(mdp, 0.0, 1e-12);
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)], mdp.Transition(s, a).reward);
    }
  }
}

TEST(ValueIteration, BellmanResidualBelowTolerance) {
  for (double gamma : {0.0, 0.5, 0.9, 1.0}) {
    const ChainMDP mdp(ChainConfig{7, 1.0, 50});
    const double tol = 1e-9;
    const QTable q = ValueIteration(mdp, gamma, tol);
    for (int s = 0; s < mdp.n_states(); ++s) {
      if (mdp.IsTerminal(s)) continue;
      for (int a = 0; a < 2; ++a) {
        const auto o = mdp.Transition(s, a);
        const double next = o.terminal ? 0.0 : std::max(q[static_cast<std::size_t>(o.next_state)][0], q[static_cast<std::size_t>(o.next_state)][1]);
        EXPECT_LT(std::abs(q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] - (o.reward + gamma * next)), tol);
      }
    }
  }
}

TEST(MakeEnvironment, ByName) {
  EnvConfig cfg;
  EXPECT_EQ(MakeEnvironment(cfg)->obs_dim(), 76);
  cfg.name = "chain";
  EXPECT_EQ(MakeEnvironment(cfg)->num_actions(), 2);
  cfg.frame_skip = 3;
  EXPECT_NE(dynamic_cast<FrameSkip*>(MakeEnvironment(cfg).get()), nullptr);
  cfg.name = "doom";
  EXPECT_THROW(MakeEnvironment(cfg), ConfigError);
}

}  // namespace
}  // namespace ratiodqn
