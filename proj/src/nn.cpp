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

#include "rcnmp/nn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rcnmp/simd/kernels.hpp"

namespace rcnmp::nn {

double activate(Activation act, double pre) {
  switch (act) {
    case Activation::kIdentity:
      return pre;
    case Activation::kTanh:
      return std::tanh(pre);
    case Activation::kRelu:
      return pre > 0.0 ? pre : 0.0;
    case Activation::kSoftplus:
      return std::log1p(std::exp(-std::abs(pre))) + std::max(pre, 0.0);
  }
  return pre;
}

double activate_derivative(Activation act, double pre) {
  switch (act) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kTanh: {
      const double y = std::tanh(pre);
      return 1.0 - y * y;
    }
    case Activation::kRelu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kSoftplus:
      return pre >= 0.0 ? 1.0 / (1.0 + std::exp(-pre))
                        : std::exp(pre) / (1.0 + std::exp(pre));
  }
  return 1.0;
}

std::string_view activation_name(Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kSoftplus:
      return "softplus";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "softplus") return Activation::kSoftplus;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

Network::Network(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs a layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& s = layers_[l];
    if (s.in == 0 || s.out == 0) throw std::invalid_argument("empty layer");
    if (l > 0 && layers_[l - 1].out != s.in) {
      throw std::invalid_argument("layer sizes do not chain");
    }
    offsets_.push_back(total);
    total += s.in * s.out + s.out;
  }
  params_.assign(total, 0.0);
}

std::span<double> Network::weight(std::size_t layer) {
  return {params_.data() + weight_offset(layer),
          layers_[layer].in * layers_[layer].out};
}
std::span<double> Network::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), layers_[layer].out};
}
std::span<const double> Network::weight(std::size_t layer) const {
  return {params_.data() + weight_offset(layer),
          layers_[layer].in * layers_[layer].out};
}
std::span<const double> Network::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), layers_[layer].out};
}

void Network::init_glorot(Rng& rng) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const double limit = std::sqrt(
        6.0 / static_cast<double>(layers_[l].in + layers_[l].out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : weight(l)) w = dist(rng);
    std::fill(bias(l).begin(), bias(l).end(), 0.0);
  }
}

void Network::init_normal(Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& p : params_) p = dist(rng);
}

std::vector<double> Network::infer(std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw std::invalid_argument("network input size mismatch");
  }
  const auto& k = simd::active_kernels();
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> y;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& s = layers_[l];
    y.resize(s.out);
    k.gemv(weight(l).data(), bias(l).data(), x.data(), y.data(), s.out, s.in);
    if (s.activation != Activation::kIdentity) {
      for (double& v : y) v = activate(s.activation, v);
    }
    std::swap(x, y);
  }
  return x;
}

ForwardResult Network::forward(std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw std::invalid_argument("network input size mismatch");
  }
  const auto& k = simd::active_kernels();
  ForwardResult result;
  GradTape& tape = result.tape;
  tape.inputs_.resize(layers_.size());
  tape.pre_.resize(layers_.size());
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& s = layers_[l];
    std::vector<double> pre(s.out);
    k.gemv(weight(l).data(), bias(l).data(), x.data(), pre.data(), s.out, s.in);
    std::vector<double> post(pre);
    if (s.activation != Activation::kIdentity) {
      for (double& v : post) v = activate(s.activation, v);
    }
    tape.inputs_[l] = std::move(x);
    tape.pre_[l] = std::move(pre);
    x = std::move(post);
  }
  tape.output_ = x;
  result.output = std::move(x);
  return result;
}

std::vector<double> Network::backward(GradTape& tape,
                                      std::span<const double> upstream,
                                      std::span<double> param_grad) const {
  if (tape.consumed_) throw std::logic_error("gradient tape reused");
  if (upstream.size() != output_size()) {
    throw std::invalid_argument("upstream gradient size mismatch");
  }
  if (param_grad.size() != parameter_count()) {
    throw std::invalid_argument("parameter gradient size mismatch");
  }
  tape.consumed_ = true;
  const auto& k = simd::active_kernels();
  std::vector<double> grad(upstream.begin(), upstream.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerShape& s = layers_[l];
    const std::vector<double>& pre = tape.pre_[l];
    const std::vector<double>& in = tape.inputs_[l];
    if (s.activation != Activation::kIdentity) {
      for (std::size_t o = 0; o < s.out; ++o) {
        grad[o] *= activate_derivative(s.activation, pre[o]);
      }
    }
    double* w_grad = param_grad.data() + weight_offset(l);
    double* b_grad = param_grad.data() + bias_offset(l);
    const double* w = params_.data() + weight_offset(l);
    std::vector<double> below(s.in, 0.0);
    for (std::size_t o = 0; o < s.out; ++o) {
      const double g = grad[o];
      if (g == 0.0) continue;
      b_grad[o] += g;
      k.axpy(g, in.data(), w_grad + o * s.in, s.in);
      k.axpy(g, w + o * s.in, below.data(), s.in);
    }
    grad = std::move(below);
  }
  return grad;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam shapes do not match");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double step_size = cfg.lr / (1.0 - std::pow(cfg.beta1, t));
  const double second = 1.0 / (1.0 - std::pow(cfg.beta2, t));
  simd::active_kernels().adam(params.data(), grads.data(), state.m.data(),
                              state.v.data(), params.size(), cfg.beta1,
                              cfg.beta2, step_size, second, cfg.eps);
}

double relative_error(double a, double b, double atol) {
  const double excess = std::max(0.0, std::abs(a - b) - atol);
  return excess / (std::abs(a) + std::abs(b) + atol);
}

GradCheckReport grad_check(std::span<double> params,
                           std::span<const double> analytic,
                           const std::function<double()>& loss,
                           double tolerance, double step) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("gradient size mismatch");
  }
  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = loss();
    params[i] = saved - step;
    const double down = loss();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = relative_error(analytic[i], numeric);
    report.max_abs_error =
        std::max(report.max_abs_error, std::abs(analytic[i] - numeric));
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

void write_network(std::ostream& out, const Network& net) {
  char buf[32];
  out << "network " << net.layers().size() << '\n';
  for (const LayerShape& s : net.layers()) {
    out << "layer " << s.in << ' ' << s.out << ' '
        << activation_name(s.activation) << '\n';
  }
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const LayerShape& s = net.layers()[l];
    auto w = net.weight(l);
    for (std::size_t o = 0; o < s.out; ++o) {
      for (std::size_t i = 0; i < s.in; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", w[o * s.in + i]);
        out << (i ? " " : "") << buf;
      }
      out << '\n';
    }
    auto b = net.bias(l);
    for (std::size_t o = 0; o < s.out; ++o) {
      std::snprintf(buf, sizeof(buf), "%.17g", b[o]);
      out << (o ? " " : "") << buf;
    }
    out << '\n';
  }
}

Network read_network(std::istream& in) {
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "network" || count == 0) {
    throw std::invalid_argument("malformed network checkpoint header");
  }
  std::vector<LayerShape> layers;
  for (std::size_t l = 0; l < count; ++l) {
    std::string act;
    LayerShape s;
    if (!(in >> tag >> s.in >> s.out >> act) || tag != "layer") {
      throw std::invalid_argument("malformed network layer line");
    }
    s.activation = parse_activation(act);
    layers.push_back(s);
  }
  Network net(std::move(layers));
  for (double& p : net.parameters()) {
    std::string token;
    if (!(in >> token)) throw std::invalid_argument("truncated network checkpoint");
    auto res = std::from_chars(token.data(), token.data() + token.size(), p);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw std::invalid_argument("malformed parameter: " + token);
    }
  }
  return net;
}

}  // namespace rcnmp::nn
