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

#ifndef RATIODQN_RATIO_HPP_
#define RATIODQN_RATIO_HPP_

#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>

#include "ratiodqn/errors.hpp"

namespace ratiodqn {

// Learning updates per environment step, kept as an exact reduced fraction.
// "4:1" means four updates every step, "1:4" one update every fourth step.
class LearnRatio {
 public:
  LearnRatio() = default;
  LearnRatio(int updates, int per_steps) {
    if (updates < 1 || per_steps < 1) {
      throw ConfigError("learn ratio terms must be positive integers, got " +
                        std::to_string(updates) + ":" +
                        std::to_string(per_steps));
    }
    const int g = std::gcd(updates, per_steps);
    updates_ = updates / g;
    per_steps_ = per_steps / g;
  }

  static LearnRatio Parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("learn ratio '" + std::string(text) +
                        "' must have the form u:s");
    }
    return LearnRatio(ParseTerm(text, text.substr(0, colon)),
                      ParseTerm(text, text.substr(colon + 1)));
  }

  int updates() const { return updates_; }
  int per_steps() const { return per_steps_; }
  double value() const { return static_cast<double>(updates_) / per_steps_; }

  std::string ToString() const {
    return std::to_string(updates_) + ":" + std::to_string(per_steps_);
  }
  // Filename-safe form, e.g. "1-4".
  std::string FileTag() const {
    return std::to_string(updates_) + "-" + std::to_string(per_steps_);
  }

  bool operator==(const LearnRatio&) const = default;

 private:
  static int ParseTerm(std::string_view whole, std::string_view term) {
    int v = 0;
    const auto* end = term.data() + term.size();
    const auto [ptr, ec] = std::from_chars(term.data(), end, v);
    if (term.empty() || ec != std::errc() || ptr != end) {
      throw ConfigError("learn ratio '" + std::string(whole) +
                        "' must have the form u:s with positive integers");
    }
    return v;
  }

  int updates_ = 1;
  int per_steps_ = 1;
};

// Learning rate used for the 1:1 ratio at the centre of the search grid.
inline constexpr double kBaseLearningRate = 5e-5;
inline constexpr std::array<int, 5> kDefaultGridExponents{-2, -1, 0, 1, 2};

// Learning rate scales inversely with updates per step.
inline double LrGridCenter(const LearnRatio& ratio) {
  return kBaseLearningRate * ratio.per_steps() / ratio.updates();
}

inline double LrForExponent(const LearnRatio& ratio, int k) {
  return LrGridCenter(ratio) * std::ldexp(1.0, k);
}

// Five learning rates, ascending: centre * 2^k for k = -2..2.
inline std::array<double, 5> LrGrid(const LearnRatio& ratio) {
  std::array<double, 5> grid{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = LrForExponent(ratio, kDefaultGridExponents[i]);
  }
  return grid;
}

struct UpdateCount {
  int count = 0;
  double accumulator = 0.0;
};

// Advances the fractional update accumulator by one environment step.
// The accumulator is snapped to the ratio's denominator so that any s
// consecutive steps yield exactly u updates with no floating drift.
inline UpdateCount UpdatesForStep(const LearnRatio& ratio, double accumulator) {
  const int s = ratio.per_steps();
  long phase = std::lround(accumulator * s) + ratio.updates();
  const int count = static_cast<int>(phase / s);
  phase %= s;
  return {count, static_cast<double>(phase) / s};
}

// Integer-phase form of UpdatesForStep used inside the training loop.
class UpdateScheduler {
 public:
  explicit UpdateScheduler(LearnRatio ratio) : ratio_(ratio) {}

  int Step() {
    phase_ += ratio_.updates();
    const int count = static_cast<int>(phase_ / ratio_.per_steps());
    phase_ %= ratio_.per_steps();
    return count;
  }

  double accumulator() const {
    return static_cast<double>(phase_) / ratio_.per_steps();
  }

 private:
  LearnRatio ratio_;
  long phase_ = 0;
};

// Expected number of times a transition is drawn while resident in a full
// buffer: batch_size * updates-per-step.
inline double ExpectedSampleRate(const LearnRatio& ratio, int batch_size,
                                 int /*buffer_size*/) {
  return batch_size * ratio.value();
}

}  // namespace ratiodqn

#endif  // RATIODQN_RATIO_HPP_
