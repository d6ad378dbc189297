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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rcnmp/config.hpp"
#include "rcnmp/learner.hpp"
#include "rcnmp/nn.hpp"

namespace rcnmp {

// Settings shared by the experiment subcommands. `extra` holds the
// subcommand's own keys (points, environments, seeds, pairs, train_steps,
// samples); everything else in the config file is a RunConfig key.
struct CommandOptions {
  RunConfig run;
  KeyValues extra;
  std::optional<std::filesystem::path> out_dir;
  bool svg = false;
  bool force = false;
};

// Splits a merged key = value set into RunConfig keys (applied over `base`)
// and the subcommand keys listed in `own`. Unknown keys throw.
CommandOptions split_options(const KeyValues& kv, const RunConfig& base,
                             const std::vector<std::string>& own);

// Per-subcommand defaults for the learning loop.
RunConfig via_points_defaults();
RunConfig bottle_pass_defaults();

// Throws std::runtime_error when `dir` holds a completed run and `force`
// is off; otherwise clears a stale COMPLETED marker and creates `dir`.
void prepare_run_dir(const std::filesystem::path& dir, bool force);

// ---- demo-sampling ----

struct DemoSamplingResult {
  std::vector<Trajectory> samples;  // stochastic, conditioned on the start point
  Trajectory deterministic;         // z = mu
  std::vector<double> sample_min, sample_max, demo_min, demo_max;
  std::vector<double> coverage;     // (sample range) / (demo range) per grid point
  double coverage_mid = 0.0;        // same ratio at t = 0.5, interpolated
  std::size_t distinct_samples = 0;
  std::vector<double> loss_trace;
};

// Keys: train_steps (20000), samples (50).
DemoSamplingResult run_demo_sampling(const CommandOptions& opt);

// ---- via-points ----

struct ViaRunSummary {
  std::size_t points = 0;
  std::size_t environment = 0;
  ViaPointTask task;
  double final_error = 0.0;
  bool solved = false;
  std::vector<GenerationRecord> records;
  ExperimentResult result;
};

// Environment `index` for `points` targets; a pure function of the seed.
ViaPointTask via_task_for(std::uint64_t seed, std::size_t points, std::size_t index);
// Seed of the learning run on that environment.
std::uint64_t via_run_seed(std::uint64_t seed, std::size_t points, std::size_t index);

// Keys: points (2,3,4,5), environments (10).
std::vector<ViaRunSummary> run_via_points(const CommandOptions& opt);

// ---- bottle-pass ----

struct BottleRunSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool solved = false;
  std::size_t first_solved_rollout = 0;
  std::size_t s_solutions = 0;        // solutions passing the first bottle on the left
  std::size_t reverse_solutions = 0;  // ... on the right
  double best_reward = 0.0;
  std::vector<GenerationRecord> records;
};

std::uint64_t bottle_run_seed(std::uint64_t seed, std::size_t index);

// Keys: seeds (20).
std::vector<BottleRunSummary> run_bottle_pass(const CommandOptions& opt);

// ---- ablate ----

struct AblationPair {
  std::size_t pair = 0;
  std::size_t points = 0;
  double final_full = 0.0;
  double final_no_crossover = 0.0;
  double final_no_mutation = 0.0;
  double early_full = 0.0;  // best error within the first `early_rollouts`
  double early_no_crossover = 0.0;
  double early_no_mutation = 0.0;
};

struct AblationResult {
  std::size_t early_rollouts = 100;
  std::vector<AblationPair> pairs;
};

// Keys: pairs (20), points (2,3,4,5; cycled over pairs), early_rollouts (100).
AblationResult run_ablation(const CommandOptions& opt);

// ---- grad-check ----

struct GradCheckDraw {
  std::uint64_t draw = 0;
  nn::GradCheckReport encoder, head, decoder;
  bool passed() const { return encoder.passed && head.passed && decoder.passed; }
  double max_rel_error() const;
};

// Finite-difference check of the ELBO gradients for the full architecture
// with fixed reparameterization noise. Parameters ~ N(0, 0.1^2).
std::vector<GradCheckDraw> run_grad_check(std::uint64_t seed, std::size_t draws,
                                          std::size_t dim, std::size_t observations,
                                          std::size_t targets, double tolerance);

// ---- replay ----

// Renders a stored run directory as SVG. Reads only.
std::string render_replay(const std::filesystem::path& run_dir);

}  // namespace rcnmp
