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

#ifndef RATIODQN_NN_HPP_
#define RATIODQN_NN_HPP_

// Dense feed-forward Q-network with hand-written backpropagation and an
// RMSProp optimizer. All arithmetic is double precision.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ratiodqn/errors.hpp"

namespace ratiodqn {

using Vector = Eigen::VectorXd;
// Batches are stored one sample per row: [batch x features].
using Matrix = Eigen::MatrixXd;

enum class Activation { kRelu };

struct HiddenLayer {
  int width = 0;
  Activation activation = Activation::kRelu;

  bool operator==(const HiddenLayer&) const = default;
};

struct NetworkSpec {
  int input_dim = 0;
  std::vector<HiddenLayer> hidden_layers;
  int output_dim = 0;

  bool operator==(const NetworkSpec&) const = default;

  // input -> 128 relu -> 128 relu -> actions.
  static NetworkSpec Default(int input_dim, int num_actions) {
    return NetworkSpec{input_dim, {{128}, {128}}, num_actions};
  }

  void Validate() const {
    if (input_dim < 1 || output_dim < 1) {
      throw ShapeError("network spec needs input_dim >= 1 and output_dim >= 1");
    }
    for (const auto& h : hidden_layers) {
      if (h.width < 1) throw ShapeError("hidden layer width must be >= 1");
    }
  }

  // Layer widths including input and output.
  std::vector<int> Widths() const {
    std::vector<int> w{input_dim};
    for (const auto& h : hidden_layers) w.push_back(h.width);
    w.push_back(output_dim);
    return w;
  }

  std::size_t NumParameters() const {
    const auto w = Widths();
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      n += static_cast<std::size_t>(w[i + 1]) * (w[i] + 1);
    }
    return n;
  }
};

// weight is [out x in]; bias has `out` entries.
struct DenseParams {
  Matrix weight;
  Vector bias;

  bool operator==(const DenseParams& o) const {
    return weight.rows() == o.weight.rows() &&
           weight.cols() == o.weight.cols() && bias.size() == o.bias.size() &&
           weight == o.weight && bias == o.bias;
  }
};

// Parameter-shaped storage shared by networks, gradients and optimizer state.
struct ParamSet {
  std::vector<DenseParams> layers;

  bool operator==(const ParamSet&) const = default;

  static ParamSet ZerosLike(const ParamSet& other) {
    ParamSet z;
    z.layers.reserve(other.layers.size());
    for (const auto& l : other.layers) {
      z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                          Vector::Zero(l.bias.size())});
    }
    return z;
  }

  bool SameShape(const ParamSet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& a = layers[i];
      const auto& b = other.layers[i];
      if (a.weight.rows() != b.weight.rows() ||
          a.weight.cols() != b.weight.cols() ||
          a.bias.size() != b.bias.size()) {
        return false;
      }
    }
    return true;
  }

  bool AllFinite() const {
    for (const auto& l : layers) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  // Visits every scalar in a fixed order: layer by layer, weights
  // (column-major) then biases.
  template <typename Fn>
  void ForEach(Fn&& fn) {
    for (auto& l : layers) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) fn(l.weight.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
  }
  template <typename Fn>
  void ForEach(Fn&& fn) const {
    for (const auto& l : layers) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) fn(l.weight.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
  }
};

using GradientBuffer = ParamSet;

struct Network {
  NetworkSpec spec;
  ParamSet params;

  bool operator==(const Network&) const = default;
};

// Weights ~ U(-b, b) with b = sqrt(6 / (fan_in + fan_out)); biases zero.
inline double InitBound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline Network InitNetwork(const NetworkSpec& spec, std::uint64_t seed) {
  spec.Validate();
  std::mt19937_64 rng(seed);
  Network net{spec, {}};
  const auto widths = spec.Widths();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i];
    const int out = widths[i + 1];
    const double bound = InitBound(in, out);
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseParams layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index k = 0; k < layer.weight.size(); ++k) {
      layer.weight.data()[k] = dist(rng);
    }
    net.params.layers.push_back(std::move(layer));
  }
  return net;
}

// Pre- and post-activation values of every layer for one batch.
struct ForwardCache {
  std::vector<Matrix> pre;   // z_l = a_{l-1} W_l^T + b_l
  std::vector<Matrix> post;  // a_l; post[0] is the input batch
};

namespace detail {

inline void CheckInput(const Network& net, const Matrix& batch) {
  if (batch.cols() != net.spec.input_dim) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) +
                     " columns, network expects " +
                     std::to_string(net.spec.input_dim));
  }
}

}  // namespace detail

inline ForwardCache ForwardWithCache(const Network& net, const Matrix& batch) {
  detail::CheckInput(net, batch);
  const std::size_t n_layers = net.params.layers.size();
  ForwardCache cache;
  cache.pre.reserve(n_layers);
  cache.post.reserve(n_layers + 1);
  cache.post.push_back(batch);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& p = net.params.layers[l];
    Matrix z = cache.post.back() * p.weight.transpose();
    z.rowwise() += p.bias.transpose();
    cache.pre.push_back(z);
    if (l + 1 < n_layers) {
      cache.post.push_back(z.cwiseMax(0.0));
    } else {
      cache.post.push_back(std::move(z));
    }
  }
  return cache;
}

// Q-values, [batch x output_dim].
inline Matrix Forward(const Network& net, const Matrix& batch) {
  detail::CheckInput(net, batch);
  Matrix a = batch;
  const std::size_t n_layers = net.params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& p = net.params.layers[l];
    Matrix z = a * p.weight.transpose();
    z.rowwise() += p.bias.transpose();
    a = (l + 1 < n_layers) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a;
}

// Single observation convenience; returns one Q-value per action.
inline Vector ForwardOne(const Network& net, const Vector& obs) {
  return Forward(net, obs.transpose()).row(0).transpose();
}

// Gradient of sum(upstream .* Forward(net, batch)) using a cache produced by
// ForwardWithCache on the same batch.
inline GradientBuffer BackwardFromCache(const Network& net,
                                        const ForwardCache& cache,
                                        const Matrix& upstream) {
  const std::size_t n_layers = net.params.layers.size();
  const Matrix& out = cache.post.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ShapeError("upstream gradient shape does not match network output");
  }
  GradientBuffer grads;
  grads.layers.resize(n_layers);
  Matrix delta = upstream;  // dL/dz for the current layer
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& p = net.params.layers[l];
    grads.layers[l].weight = delta.transpose() * cache.post[l];
    grads.layers[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix upstream_act = delta * p.weight;
      delta = upstream_act.cwiseProduct(
          (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

inline GradientBuffer Backward(const Network& net, const Matrix& batch,
                               const Matrix& upstream) {
  return BackwardFromCache(net, ForwardWithCache(net, batch), upstream);
}

struct RMSPropState {
  ParamSet square_avg;
  double smoothing = 0.95;
  double divisor_epsilon = 1e-6;

  static RMSPropState For(const Network& net, double smoothing = 0.95,
                          double divisor_epsilon = 1e-6) {
    return RMSPropState{ParamSet::ZerosLike(net.params), smoothing,
                        divisor_epsilon};
  }

  bool operator==(const RMSPropState&) const = default;
};

// s <- rho*s + (1-rho)*g^2 ; theta <- theta - lr*g/(sqrt(s)+eps).
// Nothing is modified when a gradient entry is non-finite.
inline void RmspropStep(Network& net, const GradientBuffer& grads,
                        RMSPropState& state, double lr) {
  if (!grads.SameShape(net.params) || !state.square_avg.SameShape(net.params)) {
    throw ShapeError("gradient/optimizer state shape does not match network");
  }
  if (!grads.AllFinite()) {
    throw NumericError("non-finite gradient passed to RMSProp step");
  }
  const double rho = state.smoothing;
  const double eps = state.divisor_epsilon;
  for (std::size_t l = 0; l < net.params.layers.size(); ++l) {
    auto& p = net.params.layers[l];
    auto& s = state.square_avg.layers[l];
    const auto& g = grads.layers[l];
    s.weight.array() = rho * s.weight.array() + (1.0 - rho) * g.weight.array().square();
    p.weight.array() -= lr * g.weight.array() / (s.weight.array().sqrt() + eps);
    s.bias.array() = rho * s.bias.array() + (1.0 - rho) * g.bias.array().square();
    p.bias.array() -= lr * g.bias.array() / (s.bias.array().sqrt() + eps);
  }
}

}  // namespace ratiodqn

#endif  // RATIODQN_NN_HPP_
