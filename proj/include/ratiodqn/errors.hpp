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

#ifndef RATIODQN_ERRORS_HPP_
#define RATIODQN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ratiodqn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix/vector dimensions disagree with a network or buffer.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/inf appeared in a gradient, Q-value or loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Replay buffer holds fewer transitions than a minibatch needs.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition (e.g. stepping a finished episode).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file is truncated, corrupt or of the wrong kind.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ratiodqn

#endif  // RATIODQN_ERRORS_HPP_
