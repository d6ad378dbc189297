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
#include <string>

#include "doctest.h"
#include "rcnmp/commands.hpp"
#include "rcnmp/envs.hpp"

namespace rcnmp {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rcnmp_cmd_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

KeyValues kv_of(std::initializer_list<std::pair<const char*, const char*>> items) {
  KeyValues kv;
  for (const auto& [k, v] : items) kv.set(k, v);
  return kv;
}

CommandOptions small(std::initializer_list<std::pair<const char*, const char*>> extra,
                     const RunConfig& base, const std::vector<std::string>& own) {
  KeyValues kv = kv_of(extra);
  kv.set("hidden", "16");
  kv.set("train_steps_per_gen", "10");
  return split_options(kv, base, own);
}

std::size_t csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty();
  return n - 1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("split_options routes own keys and rejects unknown ones") {
  const KeyValues kv = kv_of({{"points", "2,3"}, {"seed", "7"}, {"mutation_sigma", "0.5"}});
  const CommandOptions opt = split_options(kv, via_points_defaults(), {"points", "environments"});
  CHECK(opt.extra.at("points") == "2,3");
  CHECK_FALSE(opt.extra.contains("seed"));
  CHECK(opt.run.seed == 7);
  CHECK(opt.run.mutation_sigma == 0.5);
  CHECK(opt.run.budget == via_points_defaults().budget);
  CHECK_THROWS(split_options(kv_of({{"nonsense", "1"}}), RunConfig{}, {"points"}));
}

TEST_CASE("defaults") {
  CHECK(via_points_defaults().budget == 300);
  CHECK(via_points_defaults().environment == "via-points");
  const RunConfig b = bottle_pass_defaults();
  CHECK(b.environment == "bottle-pass");
  CHECK(b.generations == 15);
  CHECK(b.n_sample == 20);
  CHECK(b.m_crossover == 20);
}

TEST_CASE("prepare_run_dir refuses a completed run without force") {
  const fs::path dir = scratch_dir("prepare");
  prepare_run_dir(dir, false);
  CHECK(fs::is_directory(dir));
  std::ofstream(dir / "COMPLETED") << "ok\n";
  CHECK_THROWS_AS(prepare_run_dir(dir, false), std::runtime_error);
  prepare_run_dir(dir, true);
  CHECK_FALSE(fs::exists(dir / "COMPLETED"));
  fs::remove_all(dir);
}

TEST_CASE("via task and run seeds are pure functions of the master seed") {
  const ViaPointTask a = via_task_for(3, 2, 4);
  const ViaPointTask b = via_task_for(3, 2, 4);
  REQUIRE(a.points.size() == 2);
  CHECK(a.points[0].x == b.points[0].x);
  CHECK(a.points[1].y == b.points[1].y);
  CHECK(via_task_for(3, 2, 5).points[0].x != a.points[0].x);
  CHECK(via_run_seed(3, 2, 4) == via_run_seed(3, 5, 4));
  CHECK(via_run_seed(3, 2, 4) != via_run_seed(3, 2, 5));
  CHECK(bottle_run_seed(0, 1) != bottle_run_seed(0, 2));
}

TEST_CASE("via-points respects the budget and writes one aggregate row per generation") {
  const fs::path dir = scratch_dir("via");
  RunConfig base = via_points_defaults();
  base.budget = 90;
  CommandOptions opt = small({{"points", "2"}, {"environments", "3"}}, base, {"points", "environments"});
  opt.out_dir = dir;
  const auto runs = run_via_points(opt);
  REQUIRE(runs.size() == 3);
  for (const ViaRunSummary& s : runs) {
    CHECK(s.records.back().rollouts == 90);
    CHECK(s.final_error == doctest::Approx(ViaPointEnvironment(s.task).error(s.records.back().best)));
  }
  // 1 + 40 + 40 + 9 rollouts.
  CHECK(runs[0].records.size() == 4);
  CHECK(csv_rows(dir / "points_2" / "aggregate.csv") == runs[0].records.size());
  CHECK(csv_rows(dir / "points_2" / "summary.csv") == 3);
  CHECK(fs::exists(dir / "COMPLETED"));
  CHECK(fs::exists(dir / "points_2" / "env_02" / "learning_curve.csv"));
  CHECK(fs::exists(dir / "points_2" / "env_02" / "config.txt"));
  CHECK(fs::exists(dir / "points_2" / "env_02" / "final" / "best.csv"));
  CHECK_THROWS(run_via_points(opt));
  fs::remove_all(dir);
}

TEST_CASE("replay is byte-stable and leaves the run directory untouched") {
  const fs::path dir = scratch_dir("replay");
  RunConfig base = bottle_pass_defaults();
  base.generations = 2;
  CommandOptions opt = small({{"seeds", "1"}}, base, {"seeds"});
  opt.out_dir = dir;
  run_bottle_pass(opt);
  const fs::path run = dir / "seed_00";
  const auto before = snapshot(run);
  const std::string a = render_replay(run);
  const std::string b = render_replay(run);
  CHECK(a == b);
  CHECK(snapshot(run) == before);
  CHECK(a.rfind("<svg", 0) == 0);
  // Both expanded bottle circles are drawn.
  std::size_t ellipses = 0;
  for (std::size_t pos = a.find("<ellipse"); pos != std::string::npos; pos = a.find("<ellipse", pos + 1)) {
    ++ellipses;
  }
  CHECK(ellipses == 2);
  CHECK(csv_rows(dir / "aggregate.csv") == 3);
  CHECK(csv_rows(dir / "summary.csv") == 1);
  fs::remove_all(dir);
}

TEST_CASE("replay legend flags a collision-free S curve") {
  const fs::path dir = scratch_dir("legend");
  fs::create_directories(dir / "final");
  const BottlePassEnvironment env;
  save_task(dir / "task.txt", env);
  const std::vector<double> xs = {0, 0.15, 0.30, 0.40, 0.55, 0.7};
  const std::vector<double> ys = {0, 0.08, 0.08, -0.08, -0.08, 0};
  std::vector<double> t, v;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    t.push_back(static_cast<double>(i) / 5.0);
    v.push_back(xs[i]);
    v.push_back(ys[i]);
  }
  save_trajectory(dir / "final" / "best.csv", Trajectory(t, v, 2));
  const std::string svg = render_replay(dir);
  CHECK(svg.find("bottles down: 0 (collision-free)") != std::string::npos);
  CHECK(svg.find("aperture crossed: yes") != std::string::npos);
  CHECK(svg.find("mode: S") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("demo-sampling writes the coverage column and respects the deterministic flag") {
  RunConfig base;
  base.init = InitMode::kDemos;
  base.hidden = 16;
  const std::vector<std::string> own = {"train_steps", "samples"};
  {
    const fs::path dir = scratch_dir("demo");
    CommandOptions opt = split_options(kv_of({{"train_steps", "50"}, {"samples", "6"}}), base, own);
    opt.out_dir = dir;
    const DemoSamplingResult r = run_demo_sampling(opt);
    CHECK(r.samples.size() == 6);
    CHECK(r.distinct_samples == 6);
    CHECK(r.loss_trace.size() == 50);
    std::ifstream in(dir / "stats.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,demo_min,demo_max,sample_min,sample_max,coverage");
    CHECK(csv_rows(dir / "stats.csv") == kDefaultLength);
    CHECK(fs::exists(dir / "deterministic.csv"));
    CHECK(fs::exists(dir / "COMPLETED"));
    fs::remove_all(dir);
  }
  {
    CommandOptions opt = split_options(
        kv_of({{"train_steps", "50"}, {"samples", "6"}, {"deterministic_latent", "true"}}), base, own);
    const DemoSamplingResult r = run_demo_sampling(opt);
    CHECK(r.distinct_samples == 1);
    CHECK(r.samples.front() == r.deterministic);
  }
}

TEST_CASE("ablation shares the initial record and writes three labeled curves") {
  const fs::path dir = scratch_dir("ablate");
  RunConfig base = via_points_defaults();
  base.budget = 41;
  CommandOptions opt = small({{"pairs", "2"}, {"early_rollouts", "10"}}, base,
                             {"pairs", "points", "early_rollouts"});
  opt.out_dir = dir;
  const AblationResult r = run_ablation(opt);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0].points == 2);
  CHECK(r.pairs[1].points == 3);
  for (const char* label : {"full", "no_crossover", "no_mutation"}) {
    CHECK(fs::exists(dir / (std::string(label) + ".csv")));
  }
  const auto first_line = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    return line;
  };
  CHECK(first_line(dir / "full.csv") == first_line(dir / "no_crossover.csv"));
  CHECK(first_line(dir / "full.csv") == first_line(dir / "no_mutation.csv"));
  CHECK(first_line(dir / "full" / "pair_00" / "learning_curve.csv") ==
        first_line(dir / "no_mutation" / "pair_00" / "learning_curve.csv"));
  CHECK(csv_rows(dir / "pairs.csv") == 2);
  fs::remove_all(dir);
}

TEST_CASE("grad check passes on a small configuration") {
  const auto draws = run_grad_check(5, 2, 1, 2, 2, 1e-4);
  REQUIRE(draws.size() == 2);
  for (const GradCheckDraw& d : draws) {
    CHECK(d.passed());
    CHECK(d.max_rel_error() < 1e-4);
    CHECK(d.encoder.checked > 0);
  }
}

}  // namespace rcnmp
