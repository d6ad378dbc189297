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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "rcnmp/envs.hpp"
#include "rcnmp/learner.hpp"
#include "rcnmp/model.hpp"

namespace rcnmp {
namespace {

ObservationPoint obs(double t, std::vector<double> x, double r) { return {t, std::move(x), r}; }

RcnmpModel small_model(std::size_t dim, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.dim = dim;
  Rng rng(seed);
  return RcnmpModel(cfg, rng);
}

TEST_CASE("encode aggregation properties") {
  RcnmpModel model = small_model(2, 1);
  const std::vector<ObservationPoint> one = {obs(0.3, {0.1, -0.2}, 0.7)};
  const std::vector<ObservationPoint> twice = {one[0], one[0]};
  const auto a = model.encode(one);
  const auto b = model.encode(twice);
  CHECK(a.mu == b.mu);
  CHECK(a.sigma == b.sigma);

  std::vector<ObservationPoint> many;
  Rng rng(2);
  for (int i = 0; i < 6; ++i) {
    many.push_back(obs(uniform01(rng), {standard_normal(rng), standard_normal(rng)}, uniform01(rng)));
  }
  const auto base = model.encode(many);
  std::vector<ObservationPoint> shuffled = many;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[1], shuffled[4]);
  const auto perm = model.encode(shuffled);
  // Exact equality; the aggregation must not depend on order.
  CHECK(base.mu == perm.mu);
  CHECK(base.sigma == perm.sigma);
  for (double s : base.sigma) CHECK(s >= 1e-3);

  // Single observation: the aggregate is that observation's encoding.
  const std::vector<double> enc_in = {0.3, 0.1, -0.2, 0.7};
  const auto encoding = model.encoder().infer(enc_in);
  const auto head = model.latent_head().infer(encoding);
  for (std::size_t k = 0; k < a.mu.size(); ++k) CHECK(a.mu[k] == head[k]);

  CHECK_THROWS_AS(model.encode(std::vector<ObservationPoint>{}), std::invalid_argument);
}

TEST_CASE("sample_latent") {
  LatentDistribution narrow{{0.5, -1.0}, {1e-12, 1e-12}};
  Rng rng(3);
  const auto s = sample_latent(narrow, rng);
  CHECK(s.z[0] == doctest::Approx(0.5));
  CHECK(s.z[1] == doctest::Approx(-1.0));

  Rng a(9), b(9);
  LatentDistribution unit{{0.0}, {1.0}};
  CHECK(sample_latent(unit, a).z == sample_latent(unit, b).z);

  double sum = 0.0;
  double sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double z = sample_latent(unit, rng).z[0];
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(stddev - 1.0) < 0.05);
}

TEST_CASE("kl closed form") {
  CHECK(kl_to_standard_normal({{0.0, 0.0}, {1.0, 1.0}}) == 0.0);
  CHECK(kl_to_standard_normal({{1.0}, {1.0}}) == doctest::Approx(0.5));
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    LatentDistribution d{{standard_normal(rng)}, {0.01 + 3 * uniform01(rng)}};
    CHECK(kl_to_standard_normal(d) >= 0.0);
  }
}

TEST_CASE("decode") {
  RcnmpModel model = small_model(2, 5);
  const std::vector<double> z(8, 0.3);
  const auto a = model.decode(z, 0.4, 1.0);
  const auto b = model.decode(z, 0.4, 1.0);
  CHECK(a.mean == b.mean);
  CHECK(a.std == b.std);
  // Push the std head far negative; the floor must hold.
  auto& dec = model.decoder();
  const std::size_t last = dec.layers().size() - 1;
  for (double& w : dec.weight(last)) w = 0.0;
  for (double& bb : dec.bias(last)) bb = -1000.0;
  for (double s : model.decode(z, 0.4, 1.0).std) CHECK(s >= 1e-3);
}

TEST_CASE("nll at the decoder mean") {
  RcnmpModel model = small_model(1, 6);
  const std::vector<ObservationPoint> context = {obs(0.2, {0.3}, 1.0)};
  const auto dist = model.encode(context);
  const std::vector<double> noise(8, 0.0);
  const auto out = model.decode(dist.mu, 0.6, 1.0);
  const std::vector<ObservationPoint> target = {obs(0.6, {out.mean[0]}, 1.0)};
  const auto loss = model.elbo_loss(context, target, noise, nullptr);
  const double s = out.std[0];
  CHECK(loss.nll == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi * s * s)));
  CHECK(loss.kl == doctest::Approx(kl_to_standard_normal(dist)));
  CHECK(loss.total == doctest::Approx(loss.nll + 0.05 * loss.kl));
}

TEST_CASE("elbo gradients match central differences") {
  for (std::uint64_t draw = 0; draw < 2; ++draw) {
    CAPTURE(draw);
    Rng rng(100 + draw);
    RcnmpModel model = small_model(2, draw);
    model.encoder().init_normal(rng, 0.1);
    model.latent_head().init_normal(rng, 0.1);
    model.decoder().init_normal(rng, 0.1);
    std::vector<ObservationPoint> context, targets;
    for (int i = 0; i < 2; ++i) {
      context.push_back(obs(uniform01(rng), {standard_normal(rng), standard_normal(rng)}, uniform01(rng)));
    }
    for (int i = 0; i < 3; ++i) {
      targets.push_back(obs(uniform01(rng), {standard_normal(rng), standard_normal(rng)}, uniform01(rng)));
    }
    std::vector<double> noise(8);
    for (double& e : noise) e = standard_normal(rng);
    ModelGradients grads;
    model.elbo_loss(context, targets, noise, &grads);
    auto loss = [&] { return model.elbo_loss(context, targets, noise, nullptr).total; };
    CHECK(nn::grad_check(model.latent_head().parameters(), grads.head, loss, 1e-4).passed);
    CHECK(nn::grad_check(model.decoder().parameters(), grads.decoder, loss, 1e-4).passed);
    CHECK(nn::grad_check(model.encoder().parameters(), grads.encoder, loss, 1e-4).passed);
  }
}

TEST_CASE("deterministic latent drops the KL and the noise") {
  ModelConfig cfg;
  cfg.deterministic_latent = true;
  Rng rng(7);
  RcnmpModel model(cfg, rng);
  const std::vector<ObservationPoint> context = {obs(0.0, {0.0}, 1.0)};
  const std::vector<ObservationPoint> targets = {obs(0.5, {0.4}, 1.0)};
  const std::vector<double> n1(8, 0.0), n2(8, 2.0);
  const auto a = model.elbo_loss(context, targets, n1, nullptr);
  const auto b = model.elbo_loss(context, targets, n2, nullptr);
  CHECK(a.kl == 0.0);
  CHECK(a.total == b.total);
  Rng g1(1), g2(2);
  CHECK(model.generate(context, 1.0, true, g1) == model.generate(context, 1.0, true, g2));
}

TEST_CASE("generate") {
  RcnmpModel model = small_model(1, 8);
  const std::vector<ObservationPoint> context = {obs(0.0, {0.0}, 1.0)};
  Rng r1(1), r2(2);
  const auto det1 = model.generate(context, 1.0, false, r1);
  const auto det2 = model.generate(context, 1.0, false, r2);
  CHECK(det1 == det2);
  CHECK(det1.length() == 100);
  const auto s1 = model.generate(context, 1.0, true, r1);
  const auto s2 = model.generate(context, 1.0, true, r2);
  double diff = 0.0;
  for (std::size_t i = 0; i < s1.length(); ++i) diff = std::max(diff, std::abs(s1.value(i, 0) - s2.value(i, 0)));
  CHECK(diff > 0.0);
}

TEST_CASE("training") {
  SUBCASE("zero steps is a no-op") {
    RcnmpModel model = small_model(1, 9);
    const RcnmpModel before = model;
    DemoEnvironment env;
    ReplayBuffer buffer = init_buffer(env, InitMode::kDemos, 100, 100);
    Rng rng(1);
    CHECK(model.train(buffer, 0, rng).empty());
    std::stringstream a, b;
    before.save(a);
    model.save(b);
    CHECK(a.str() == b.str());
  }
  SUBCASE("overfits a single trajectory") {
    ModelConfig cfg;
    cfg.deterministic_latent = true;
    Rng init(10);
    RcnmpModel model(cfg, init);
    ReplayBuffer buffer(10);
    RewardedTrajectory entry;
    entry.trajectory = Trajectory::zeros(100, 1);
    for (std::size_t i = 0; i < 100; ++i) {
      const double t = entry.trajectory.time(i);
      entry.trajectory.value(i, 0) = 0.5 * std::sin(std::numbers::pi * t) + 0.3 * t;
    }
    buffer.push(entry);
    Rng rng(2);
    model.train(buffer, 3000, rng);
    CHECK(model.optimizer_steps() == 3000);
    const std::vector<ObservationPoint> context = {obs(0.0, {0.0}, 1.0)};
    const auto out = model.generate(context, 1.0, false, rng);
    double err = 0.0;
    for (std::size_t i = 0; i < 100; ++i) err += std::abs(out.value(i, 0) - entry.trajectory.value(i, 0));
    CHECK(err / 100 < 0.05);
  }
}

TEST_CASE("checkpoint round trip") {
  RcnmpModel model = small_model(2, 11);
  DemoEnvironment env;
  std::stringstream ss;
  model.save(ss);
  const RcnmpModel back = RcnmpModel::load(ss);
  CHECK(back.encoder() == model.encoder());
  CHECK(back.latent_head() == model.latent_head());
  CHECK(back.decoder() == model.decoder());
  CHECK(back.config().dim == 2);
  CHECK(back.config().beta == model.config().beta);
  std::istringstream junk("hello\n");
  CHECK_THROWS(RcnmpModel::load(junk));
}

}  // namespace
}  // namespace rcnmp
