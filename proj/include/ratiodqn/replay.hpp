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

#ifndef RATIODQN_REPLAY_HPP_
#define RATIODQN_REPLAY_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ratiodqn/errors.hpp"
#include "ratiodqn/nn.hpp"

namespace ratiodqn {

struct Transition {
  Vector obs;
  int action = 0;
  double reward = 0.0;
  Vector next_obs;
  bool terminal = false;
};

// Fixed-capacity FIFO ring. Once full, every push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10'000) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    storage_.reserve(capacity);
  }

  void Push(Transition t) {
    if (t.obs.size() != t.next_obs.size()) {
      throw ShapeError("transition obs and next_obs differ in dimension");
    }
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
    ++total_pushed_;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return storage_.size() == capacity_; }
  std::uint64_t total_pushed() const { return total_pushed_; }

  // age 0 is the oldest resident transition.
  const Transition& AtAge(std::size_t age) const {
    if (age >= storage_.size()) throw ContractError("replay age out of range");
    const std::size_t oldest = full() ? cursor_ : 0;
    return storage_[(oldest + age) % capacity_];
  }

  const Transition& operator[](std::size_t slot) const { return storage_[slot]; }

  // Uniform draw with replacement; returns storage slots.
  std::vector<std::size_t> SampleIndices(std::size_t batch_size,
                                         std::mt19937_64& rng) const {
    if (storage_.size() < batch_size || batch_size == 0) {
      throw InsufficientDataError(
          "replay holds " + std::to_string(storage_.size()) +
          " transitions, minibatch needs " + std::to_string(batch_size));
    }
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = pick(rng);
    return idx;
  }

  std::vector<Transition> SampleMinibatch(std::size_t batch_size,
                                          std::mt19937_64& rng) const {
    std::vector<Transition> out;
    out.reserve(batch_size);
    for (std::size_t i : SampleIndices(batch_size, rng)) out.push_back(storage_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
  std::uint64_t total_pushed_ = 0;
};

}  // namespace ratiodqn

#endif  // RATIODQN_REPLAY_HPP_
