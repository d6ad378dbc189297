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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rcnmp/nn.hpp"

namespace rcnmp::nn {
namespace {

// 0.5 * sum (w_i * y_i)^2 with fixed weights, a loss exercising every output.
double weighted_square(std::span<const double> y, std::span<double> upstream) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = 0.3 + 0.1 * static_cast<double>(i);
    loss += 0.5 * w * y[i] * y[i];
    if (!upstream.empty()) upstream[i] = w * y[i];
  }
  return loss;
}

TEST_CASE("activations") {
  CHECK(activate(Activation::kSoftplus, 0.0) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(activate(Activation::kSoftplus, 800.0) == doctest::Approx(800.0));
  CHECK(activate(Activation::kSoftplus, -800.0) >= 0.0);
  CHECK(activate(Activation::kRelu, -1.0) == 0.0);
  CHECK(activate(Activation::kTanh, 0.0) == 0.0);
  CHECK(activate_derivative(Activation::kTanh, 0.0) == 1.0);
  CHECK(activate_derivative(Activation::kSoftplus, 0.0) == doctest::Approx(0.5));
  for (Activation a : {Activation::kIdentity, Activation::kTanh, Activation::kRelu,
                       Activation::kSoftplus}) {
    CHECK(parse_activation(activation_name(a)) == a);
  }
  CHECK_THROWS_AS(parse_activation("gelu"), std::invalid_argument);
}

TEST_CASE("forward examples") {
  Network zero({{3, 2, Activation::kIdentity}});
  const std::vector<double> x = {1.0, -2.0, 3.0};
  CHECK(zero.infer(x) == std::vector<double>{0.0, 0.0});

  Network affine({{1, 1, Activation::kIdentity}});
  affine.weight(0)[0] = 2.0;
  affine.bias(0)[0] = 1.0;
  const std::vector<double> three = {3.0};
  CHECK(affine.infer(three)[0] == 7.0);
  CHECK(affine.forward(three).output[0] == 7.0);

  Network soft({{1, 1, Activation::kSoftplus}});
  CHECK(soft.infer(std::vector<double>{0.0})[0] == doctest::Approx(std::log(2.0)));

  CHECK_THROWS_AS(affine.infer(x), std::invalid_argument);
  CHECK_THROWS_AS(Network({{2, 3, Activation::kRelu}, {4, 1, Activation::kIdentity}}),
                  std::invalid_argument);
}

TEST_CASE("backward examples") {
  Network affine({{2, 2, Activation::kIdentity}});
  Rng rng(1);
  affine.init_normal(rng, 1.0);
  const std::vector<double> x = {0.4, -0.7};
  auto fwd = affine.forward(x);
  std::vector<double> grad(affine.parameter_count(), 0.0);
  const std::vector<double> upstream = {1.5, -2.5};
  const auto dx = affine.backward(fwd.tape, upstream, grad);
  // Bias gradient is the upstream.
  CHECK(grad[4] == 1.5);
  CHECK(grad[5] == -2.5);
  // Weight gradient is upstream x input.
  CHECK(grad[0] == doctest::Approx(1.5 * 0.4));
  CHECK(grad[3] == doctest::Approx(-2.5 * -0.7));
  const auto w = affine.weight(0);
  CHECK(dx[0] == doctest::Approx(1.5 * w[0] - 2.5 * w[2]));
  CHECK(fwd.tape.consumed());
  CHECK_THROWS_AS(affine.backward(fwd.tape, upstream, grad), std::logic_error);

  Network tanh_net({{1, 1, Activation::kTanh}});
  auto t = tanh_net.forward(std::vector<double>{0.0});
  std::vector<double> g(2, 0.0);
  const auto dt = tanh_net.backward(t.tape, std::vector<double>{3.0}, g);
  CHECK(g[1] == 3.0);
  CHECK(dt[0] == 0.0);
}

TEST_CASE("random 3-layer net matches central differences") {
  for (Activation hidden : {Activation::kTanh, Activation::kRelu, Activation::kSoftplus}) {
    CAPTURE(activation_name(hidden));
    Network net({{4, 6, hidden}, {6, 5, hidden}, {5, 3, Activation::kIdentity}});
    Rng rng(42);
    net.init_normal(rng, 0.5);
    std::vector<double> x(4);
    for (double& v : x) v = standard_normal(rng);

    auto fwd = net.forward(x);
    std::vector<double> upstream(3);
    weighted_square(fwd.output, upstream);
    std::vector<double> grad(net.parameter_count(), 0.0);
    const auto dx = net.backward(fwd.tape, upstream, grad);

    auto loss = [&] { return weighted_square(net.infer(x), {}); };
    const auto report = grad_check(net.parameters(), grad, loss, 1e-4);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-4);
    CHECK(report.checked == net.parameter_count());

    // Input gradient through the same oracle.
    const auto input_report = grad_check(x, dx, loss, 1e-4);
    CHECK(input_report.passed);
  }
}

TEST_CASE("grad_check negative control and trivial losses") {
  Network net({{3, 4, Activation::kTanh}, {4, 2, Activation::kIdentity}});
  Rng rng(9);
  net.init_normal(rng, 0.5);
  const std::vector<double> x = {0.2, -0.1, 0.5};
  auto fwd = net.forward(x);
  std::vector<double> upstream(2);
  weighted_square(fwd.output, upstream);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(fwd.tape, upstream, grad);
  auto loss = [&] { return weighted_square(net.infer(x), {}); };

  auto wrong = grad;
  wrong[3] *= 1.01;
  const auto bad = grad_check(net.parameters(), wrong, loss, 1e-4);
  CHECK_FALSE(bad.passed);
  CHECK(bad.worst_index == 3);

  const std::vector<double> before(net.parameters().begin(), net.parameters().end());
  grad_check(net.parameters(), grad, loss, 1e-4);
  CHECK(std::equal(before.begin(), before.end(), net.parameters().begin()));

  std::vector<double> zeros(net.parameter_count(), 0.0);
  const auto flat = grad_check(net.parameters(), zeros, [] { return 0.0; }, 1e-4);
  CHECK(flat.passed);
  CHECK(flat.max_abs_error == 0.0);

  std::vector<double> p = {1.0, 2.0, 3.0};
  const std::vector<double> slope = {0.5, -1.0, 2.0};
  auto linear = [&] { return 0.5 * p[0] - p[1] + 2.0 * p[2]; };
  CHECK(grad_check(p, slope, linear, 1e-4).passed);
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(1e-12, -1e-12) == 0.0);
  CHECK(relative_error(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("adam") {
  AdamConfig cfg;
  SUBCASE("zero gradient leaves parameters and decays moments") {
    std::vector<double> p = {1.0, -2.0};
    AdamState state(2);
    state.m = {0.5, 0.5};
    state.v = {0.25, 0.25};
    state.step = 3;
    const std::vector<double> g = {0.0, 0.0};
    const auto before_m = state.m;
    adam_step(p, g, state, cfg);
    CHECK(state.m[0] == doctest::Approx(0.9 * before_m[0]));
    CHECK(state.v[0] == doctest::Approx(0.999 * 0.25));
    CHECK(state.step == 4);
    // Moments are non-zero so the update is too; with fresh state it is not.
    std::vector<double> q = {1.0, -2.0};
    AdamState fresh(2);
    adam_step(q, g, fresh, cfg);
    CHECK(q == std::vector<double>{1.0, -2.0});
  }
  SUBCASE("first step moves by lr against the gradient sign") {
    for (double scale : {1e-3, 1.0, 1e3}) {
      std::vector<double> p = {0.0, 0.0, 0.0};
      const std::vector<double> g = {3.0 * scale, -0.5 * scale, 1.0 * scale};
      AdamState state(3);
      adam_step(p, g, state, cfg);
      CHECK(p[0] == doctest::Approx(-cfg.lr).epsilon(1e-6));
      CHECK(p[1] == doctest::Approx(cfg.lr).epsilon(1e-6));
      CHECK(p[2] == doctest::Approx(-cfg.lr).epsilon(1e-6));
    }
  }
  SUBCASE("quadratic converges") {
    AdamConfig fast;
    fast.lr = 1e-2;
    std::vector<double> p = {5.0};
    AdamState state(1);
    for (int i = 0; i < 2000; ++i) {
      const std::vector<double> g = {2.0 * (p[0] - 1.5)};
      adam_step(p, g, state, fast);
    }
    CHECK(std::abs(p[0] - 1.5) < 1e-3);
  }
}

TEST_CASE("initialization") {
  Network net({{10, 20, Activation::kRelu}, {20, 5, Activation::kIdentity}});
  Rng rng(4);
  net.init_glorot(rng);
  const double limit0 = std::sqrt(6.0 / 30.0);
  for (double w : net.weight(0)) CHECK(std::abs(w) <= limit0);
  for (double b : net.bias(0)) CHECK(b == 0.0);
  for (double b : net.bias(1)) CHECK(b == 0.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Network net({{3, 4, Activation::kRelu}, {4, 2, Activation::kSoftplus}});
  Rng rng(8);
  net.init_normal(rng, 0.3);
  net.parameters()[0] = 4.9e-324;
  net.parameters()[1] = 0.1 + 0.2;
  std::stringstream ss;
  write_network(ss, net);
  const Network back = read_network(ss);
  CHECK(back == net);

  std::istringstream truncated("network 1\nlayer 2 1 identity\n0.5\n");
  CHECK_THROWS(read_network(truncated));
}

TEST_CASE("forward is deterministic") {
  Network net({{5, 7, Activation::kTanh}, {7, 3, Activation::kIdentity}});
  Rng rng(12);
  net.init_glorot(rng);
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(net.infer(x) == net.infer(x));
  CHECK(net.forward(x).output == net.infer(x));
}

}  // namespace
}  // namespace rcnmp::nn
