// Copyright 2026 The rcnmp Authors
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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "rcnmp/random.hpp"

namespace rcnmp::nn {

enum class Activation { kIdentity, kTanh, kRelu, kSoftplus };

double activate(Activation act, double pre);
// d(act)/d(pre), expressed through the pre-activation value.
double activate_derivative(Activation act, double pre);

std::string_view activation_name(Activation act);
Activation parse_activation(std::string_view name);

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kIdentity;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Intermediates of one forward pass. A tape feeds exactly one backward pass.
class GradTape {
 public:
  bool consumed() const { return consumed_; }
  std::span<const double> output() const { return output_; }

 private:
  friend class Network;
  std::vector<std::vector<double>> inputs_;
  std::vector<std::vector<double>> pre_;
  std::vector<double> output_;
  bool consumed_ = false;
};

struct ForwardResult {
  std::vector<double> output;
  GradTape tape;
};

// Fully connected feed-forward network. All parameters live in one flat
// buffer: for each layer, the out x in row-major weight followed by the bias.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<LayerShape> layers);

  std::size_t input_size() const { return layers_.front().in; }
  std::size_t output_size() const { return layers_.back().out; }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<LayerShape>& layers() const { return layers_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> weight(std::size_t layer);
  std::span<double> bias(std::size_t layer);
  std::span<const double> weight(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;

  // Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void init_glorot(Rng& rng);
  // Every parameter, biases included, from N(0, stddev^2).
  void init_normal(Rng& rng, double stddev);

  // Throws std::invalid_argument on an input size mismatch.
  std::vector<double> infer(std::span<const double> input) const;
  ForwardResult forward(std::span<const double> input) const;

  // Accumulates parameter gradients into `param_grad` (size
  // parameter_count()) and returns the gradient with respect to the input.
  // Throws std::logic_error if the tape was already consumed.
  std::vector<double> backward(GradTape& tape, std::span<const double> upstream,
                               std::span<double> param_grad) const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + layers_[layer].in * layers_[layer].out;
  }

  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// Bias-corrected adaptive-moment update; increments state.step.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg);

// Corrected relative error max(0, |a - b| - atol) / (|a| + |b| + atol).
// Differences below atol (the round-off floor of a central difference at
// h = 1e-5 on O(1) losses is ~1e-10) are ignored.
inline constexpr double kGradAbsoluteTolerance = 1e-9;
double relative_error(double a, double b, double atol = kGradAbsoluteTolerance);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

// Central differences on every entry of `params` against `analytic`. The
// loss closure must read the current contents of `params`, and be
// deterministic. `params` is restored on return.
GradCheckReport grad_check(std::span<double> params,
                           std::span<const double> analytic,
                           const std::function<double()>& loss,
                           double tolerance, double step = 1e-5);

// Text checkpoint:
//   network <L>
//   layer <in> <out> <activation>        (L lines)
//   <weight rows, then the bias row, per layer; %.17g, space separated>
void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);

}  // namespace rcnmp::nn
