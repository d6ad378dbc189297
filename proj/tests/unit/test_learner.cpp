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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rcnmp/learner.hpp"

namespace rcnmp {
namespace {

RunConfig quick(std::uint64_t seed = 0) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.hidden = 32;
  cfg.train_steps_per_gen = 40;
  cfg.n_sample = 6;
  cfg.m_crossover = 4;
  cfg.generations = 3;
  cfg.mutation_sigma = 0.5;
  return cfg;
}

std::shared_ptr<const Environment> via_env() {
  return std::make_shared<ViaPointEnvironment>(ViaPointTask{{{0.3, 0.4}, {0.7, -0.3}}, 0.0, 0.0});
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST_CASE("init_buffer") {
  BottlePassEnvironment bottle;
  const ReplayBuffer b = init_buffer(bottle, InitMode::kStraightLine, 100, 100);
  REQUIRE(b.size() == 1);
  CHECK(b[0].reward_raw == doctest::Approx(-8.105));
  CHECK(b[0].reward_norm == 1.0);

  ViaPointEnvironment via({{{0.3, 0.4}, {0.7, -0.3}}, 0.2, -0.4});
  const ReplayBuffer v = init_buffer(via, InitMode::kStraightLine, 100, 100);
  for (std::size_t i = 0; i < 100; ++i) {
    const double t = v[0].trajectory.time(i);
    CHECK(v[0].trajectory.value(i, 0) == doctest::Approx(0.2 - 0.6 * t));
  }

  DemoEnvironment demo;
  CHECK(init_buffer(demo, InitMode::kDemos, 100, 100).size() == 6);
  CHECK_THROWS_AS(init_buffer(via, InitMode::kDemos, 100, 100), std::invalid_argument);
}

TEST_CASE("run config") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.population_size() == 40);
  CHECK(cfg.mutation_sigma_at(1) == doctest::Approx(cfg.mutation_sigma));
  CHECK(cfg.mutation_sigma_at(3) == doctest::Approx(cfg.mutation_sigma * cfg.mutation_decay * cfg.mutation_decay));

  RunConfig odd = cfg;
  odd.m_crossover = 3;
  CHECK_THROWS_AS(odd.validate(), std::invalid_argument);
  RunConfig tight = cfg;
  tight.budget = 10;
  CHECK_THROWS_AS(tight.validate(), std::invalid_argument);

  const KeyValues kv = cfg.to_key_values();
  const RunConfig back = RunConfig::from_key_values(kv);
  CHECK(back.to_key_values().items() == kv.items());

  KeyValues unknown;
  unknown.set("mutaton_sigma", "1");
  CHECK_THROWS_AS(RunConfig::from_key_values(unknown), std::invalid_argument);

  KeyValues partial;
  partial.set("seed", "12");
  RunConfig base;
  base.generations = 99;
  const RunConfig merged = RunConfig::from_key_values(partial, base);
  CHECK(merged.seed == 12);
  CHECK(merged.generations == 99);
}

TEST_CASE("generation loop accounting") {
  Learner learner(quick(), via_env());
  const GenerationRecord init = learner.initialize();
  CHECK(init.generation == 0);
  CHECK(init.rollouts == 1);
  double best = init.best_raw;
  std::size_t rollouts = init.rollouts;
  for (int g = 1; g <= 3; ++g) {
    const auto rec = learner.run_generation();
    REQUIRE(rec.has_value());
    CHECK(rec->generation == g);
    CHECK(rec->executed == 10);
    CHECK(rec->rollouts == rollouts + 10);
    CHECK(rec->best_raw >= best);
    CHECK(learner.last_loss_trace().size() == 40);
    rollouts = rec->rollouts;
    best = rec->best_raw;
  }
  std::size_t crossover = 0;
  for (const auto& o : learner.last_outcomes()) crossover += o.lineage == Lineage::kMutatedCrossover;
  CHECK(crossover == 4);
  CHECK(learner.buffer().size() == 1 + 3 * 10);
  CHECK(learner.model().optimizer_steps() == 120);
}

TEST_CASE("budget truncates the last generation") {
  RunConfig cfg = quick();
  cfg.budget = 25;
  cfg.generations = 100;
  const ExperimentResult res = run_experiment(cfg, via_env());
  CHECK(res.completed);
  REQUIRE(res.records.size() == 4);
  CHECK(res.records.back().rollouts == 25);
  CHECK(res.records.back().executed == 4);
}

TEST_CASE("zero generations gives the initial record only") {
  RunConfig cfg = quick();
  cfg.generations = 0;
  const ExperimentResult res = run_experiment(cfg, via_env());
  CHECK(res.records.size() == 1);
  CHECK(res.completed);
}

TEST_CASE("ablation flags") {
  SUBCASE("no crossover keeps the population size with sampled members") {
    RunConfig cfg = quick();
    cfg.use_crossover = false;
    Learner learner(cfg, via_env());
    learner.initialize();
    const auto rec = learner.run_generation();
    CHECK(rec->executed == 10);
    for (const auto& o : learner.last_outcomes()) CHECK(o.lineage == Lineage::kMutatedSampled);
  }
  SUBCASE("no mutation leaves lineages untouched") {
    RunConfig cfg = quick();
    cfg.use_mutation = false;
    Learner learner(cfg, via_env());
    learner.initialize();
    learner.run_generation();
    std::size_t sampled = 0;
    for (const auto& o : learner.last_outcomes()) sampled += o.lineage == Lineage::kSampled;
    CHECK(sampled == 6);
  }
  SUBCASE("everything off with a deterministic latent repeats one rollout") {
    RunConfig cfg = quick();
    cfg.use_mutation = false;
    cfg.use_crossover = false;
    cfg.deterministic_latent = true;
    Learner learner(cfg, via_env());
    learner.initialize();
    learner.run_generation();
    const auto& out = learner.last_outcomes();
    for (const auto& o : out) CHECK(o.executed == out[0].executed);
  }
}

TEST_CASE("runs are reproducible, including with worker threads") {
  const auto root = std::filesystem::temp_directory_path() / "rcnmp_learner_test";
  std::filesystem::remove_all(root);
  RunConfig a = quick(5);
  RunConfig b = quick(5);
  b.threads = 3;
  const auto ra = run_experiment(a, via_env(), root / "a");
  const auto rb = run_experiment(b, via_env(), root / "b");
  CHECK(ra.completed);
  CHECK(rb.completed);
  const std::string curve = slurp(root / "a" / "learning_curve.csv");
  CHECK(curve.rfind("generation,rollouts,best_raw,mean_raw,std_raw\n", 0) == 0);
  CHECK(curve == slurp(root / "b" / "learning_curve.csv"));
  CHECK(slurp(root / "a" / "final" / "best.csv") == slurp(root / "b" / "final" / "best.csv"));
  CHECK(std::filesystem::exists(root / "a" / "COMPLETED"));
  CHECK(std::filesystem::exists(root / "a" / "model.txt"));
  CHECK(std::filesystem::exists(root / "a" / "trajectories" / "gen_003_best.csv"));

  const auto rc = run_experiment(quick(6), via_env(), root / "c");
  CHECK(slurp(root / "c" / "learning_curve.csv") != curve);
  std::filesystem::remove_all(root);
}

}  // namespace
}  // namespace rcnmp
