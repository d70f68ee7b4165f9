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

#include "ratiodqn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

namespace ratiodqn {
namespace {

AgentState RandomHealthGridAgent(std::uint64_t seed) {
  HealthGrid g;
  return AgentState::Create(NetworkSpec{g.obs_dim(), {{16}}, g.num_actions()}, seed);
}

// Plays one greedy episode with a hand-written loop.
std::pair<double, double> PlayEpisode(const AgentState& a, HealthGrid& g, std::uint64_t seed) {
  Vector obs = g.Reset(seed);
  double reward = 0.0;
  while (!g.episode_over()) {
    const Vector q = ForwardOne(a.online, obs);
    int best = 0;
    for (int i = 1; i < q.size(); ++i) if (q[i] > q[best]) best = i;
    const StepResult r = g.Step(best);
    reward += r.reward;
    obs = r.obs;
  }
  return {g.EpisodeScore(), reward};
}

TEST(RunEval, SingleEpisodeMeansEqualThatEpisode) {
  const AgentState a = RandomHealthGridAgent(3);
  HealthGrid g;
  const EvalPoint p = RunEval(a, g, 1, 40);
  HealthGrid h;
  const auto [score, reward] = PlayEpisode(a, h, 40);
  EXPECT_EQ(p.mean_score, score);
  EXPECT_EQ(p.mean_reward, reward);
}

TEST(RunEval, RepeatableAndPure) {
  const AgentState a = RandomHealthGridAgent(4);
  const AgentState before = a;
  HealthGrid g;
  const EvalPoint first = RunEval(a, g, 5, 100);
  const EvalPoint second = RunEval(a, g, 5, 100);
  EXPECT_EQ(first, second);
  EXPECT_EQ(a, before);
}

TEST(RunEval, FactoryOverloadMatches) {
  const AgentState a = RandomHealthGridAgent(5);
  HealthGrid g;
  const auto factory = [] { return std::unique_ptr<Environment>(new HealthGrid()); };
  EXPECT_EQ(RunEval(a, g, 3, 7), RunEval(a, factory, 3, 7));
}

TEST(RunEval, AgreesWithMonteCarloEstimate) {
  // Arbitrary fixed policy from random weights; independent rollouts over ten
  // times as many episodes estimate its expected score.
  const AgentState a = RandomHealthGridAgent(6);
  HealthGrid g;
  const EvalPoint p = RunEval(a, g, 25, 0);
  std::vector<double> mc;
  HealthGrid h;
  for (std::uint64_t s = 0; s < 250; ++s) mc.push_back(PlayEpisode(a, h, 10'000 + s).first);
  const double mean = std::accumulate(mc.begin(), mc.end(), 0.0) / mc.size();
  double var = 0.0;
  for (double x : mc) var += (x - mean) * (x - mean);
  var /= (mc.size() - 1);
  const double se25 = std::sqrt(var / 25.0);
  EXPECT_LT(std::abs(p.mean_score - mean), 4.0 * se25 + 1e-9);
}

TEST(RunEval, RejectsZeroEpisodes) {
  const AgentState a = RandomHealthGridAgent(1);
  HealthGrid g;
  EXPECT_THROW(RunEval(a, g, 0, 0), ContractError);
}

TEST(EmaSmooth, Cases) {
  EXPECT_EQ(EmaSmooth(std::vector<double>{0.0, 10.0}, 0.8), (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(EmaSmooth(std::vector<double>(6, 3.5), 0.8), std::vector<double>(6, 3.5));
  const std::vector<double> xs{1.0, -4.0, 9.0};
  EXPECT_EQ(EmaSmooth(xs, 0.0), xs);
  EXPECT_TRUE(EmaSmooth(std::vector<double>{}, 0.8).empty());
  EXPECT_THROW(EmaSmooth(xs, 1.0), ContractError);
}

TEST(EmaSmooth, ConvergesMonotonicallyToConstantTail) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(u(rng));
    const double c = u(rng);
    xs.insert(xs.end(), 40, c);
    const auto s = EmaSmooth(xs);
    for (std::size_t i = 11; i < s.size(); ++i) {
      ASSERT_LE(std::abs(s[i] - c), std::abs(s[i - 1] - c));
    }
    EXPECT_LT(std::abs(s.back() - c), 1e-2 * (1.0 + std::abs(c)) + 1e-2);
  }
}

TEST(TopDecileMean, Cases) {
  std::vector<double> twenty(20, 10.0);
  twenty[3] = 50.0;
  twenty[17] = 48.0;
  EXPECT_EQ(TopDecileMean(twenty).value, 49.0);
  EXPECT_EQ(TopDecileMean(std::vector<double>(7, 2.5)).value, 2.5);
  EXPECT_EQ(TopDecileMean(std::vector<double>{1, 9, 3, 4, 5}).value, 9.0);
  const auto empty = TopDecileMean(std::vector<double>{});
  EXPECT_TRUE(empty.empty);
  EXPECT_EQ(empty.value, 0.0);
}

TEST(TopDecileMean, AtLeastMeanWithEqualityOnlyWhenConstant) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(1 + rng() % 40);
    for (auto& x : xs) x = u(rng);
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double top = TopDecileMean(xs).value;
    if (xs.size() > 1) {
      EXPECT_GT(top, mean);
    } else {
      EXPECT_EQ(top, mean);
    }
  }
}

TEST(AggregateSeeds, MeansAndDetail) {
  const std::vector<SeedScore> one{{5, 42.0, 1163.0}};
  const auto f1 = AggregateSeeds(one);
  EXPECT_EQ(f1.score, 42.0);
  EXPECT_EQ(f1.reward, 1163.0);
  const std::vector<SeedScore> two{{1, 40.0, 0.0}, {2, 44.0, 10.0}};
  const auto f2 = AggregateSeeds(two);
  EXPECT_EQ(f2.score, 42.0);
  EXPECT_EQ(f2.reward, 5.0);
  EXPECT_EQ(f2.per_seed.size(), 2u);
  EXPECT_THROW(AggregateSeeds(std::vector<SeedScore>{}), ContractError);
}

TEST(AggregateSeeds, PermutationInvariant) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SeedScore> xs;
    for (int i = 0; i < 7; ++i) xs.push_back({static_cast<std::uint64_t>(i), u(rng), u(rng) * 10});
    const auto base = AggregateSeeds(xs);
    std::shuffle(xs.begin(), xs.end(), rng);
    const auto shuffled = AggregateSeeds(xs);
    EXPECT_EQ(base.score, shuffled.score);
    EXPECT_EQ(base.reward, shuffled.reward);
  }
}

TEST(ReduceCurve, EmptyCurveIsFlaggedZero) {
  const auto r = ReduceCurve({});
  EXPECT_TRUE(r.empty);
  EXPECT_EQ(r.score, 0.0);
}

}  // namespace
}  // namespace ratiodqn
