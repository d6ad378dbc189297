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
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcnmp/config.hpp"
#include "rcnmp/control.hpp"
#include "rcnmp/envs.hpp"
#include "rcnmp/evolution.hpp"
#include "rcnmp/model.hpp"
#include "rcnmp/trajectory.hpp"

namespace rcnmp {

enum class InitMode { kStraightLine, kDemos };

struct RunConfig {
  std::string environment = "via-points";
  InitMode init = InitMode::kStraightLine;
  std::uint64_t seed = 0;
  int generations = 15;
  std::size_t budget = 0;  // rollout cap; 0 means unlimited
  std::size_t n_sample = 20;
  std::size_t m_crossover = 20;
  std::size_t train_steps_per_gen = 500;
  std::size_t k_best = 5;
  std::size_t k_random = 5;
  std::size_t capacity = 100;
  std::size_t length = kDefaultLength;
  std::size_t threads = 1;

  double beta = 0.05;
  double learning_rate = 1e-4;
  std::size_t latent_dim = 8;
  std::size_t hidden = 128;
  bool deterministic_latent = false;

  bool use_crossover = true;
  bool use_mutation = true;
  double mutation_sigma = 0.02;
  double mutation_kernel_width = 3.0;
  double mutation_decay = 0.97;

  double kp = 400.0;
  double kd = 40.0;
  double lambda_sharpness = 5.0;

  // Throws std::invalid_argument on non-positive counts or a budget that
  // cannot fit a single generation.
  void validate() const;
  std::size_t population_size() const { return n_sample + m_crossover; }
  double mutation_sigma_at(int generation) const;
  ModelConfig model_config(std::size_t dim) const;
  PDConfig pd_config(std::vector<double> goal) const;

  KeyValues to_key_values() const;
  // Unknown keys are rejected.
  static RunConfig from_key_values(const KeyValues& kv, RunConfig base);
  static RunConfig from_key_values(const KeyValues& kv);
};

void write_config(std::ostream& out, const RunConfig& cfg);

struct GenerationRecord {
  int generation = 0;
  std::size_t rollouts = 0;  // cumulative
  double best_raw = 0.0;     // best reward in the buffer so far
  double mean_raw = 0.0;     // over this generation's executed rollouts
  double std_raw = 0.0;
  std::size_t executed = 0;
  Trajectory best;
};

struct RolloutOutcome {
  Trajectory executed;
  Lineage lineage = Lineage::kSampled;
  double reward = 0.0;
  bool solved = false;
};

// Scored replay buffer from the environment: the straight line start -> goal
// or the environment's demonstrations.
ReplayBuffer init_buffer(const Environment& env, InitMode mode,
                         std::size_t length, std::size_t capacity);

// Observation on the start point, tagged with the requested reward.
std::vector<ObservationPoint> start_condition(const Environment& env, double r_target);

class Learner {
 public:
  Learner(RunConfig cfg, std::shared_ptr<const Environment> env);

  // Fills the buffer and returns the generation-0 record.
  GenerationRecord initialize();

  // One full loop iteration. Returns nullopt once the rollout budget is
  // spent; the final generation may execute fewer members than the
  // population when the remaining budget is smaller.
  std::optional<GenerationRecord> run_generation();

  const RunConfig& config() const { return cfg_; }
  const Environment& environment() const { return *env_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const RcnmpModel& model() const { return model_; }
  std::size_t rollouts() const { return rollouts_; }
  int generation() const { return generation_; }
  const std::vector<RolloutOutcome>& last_outcomes() const { return last_outcomes_; }
  const std::vector<double>& last_loss_trace() const { return last_loss_; }

 private:
  GenerationRecord make_record(std::span<const double> rewards) const;

  RunConfig cfg_;
  std::shared_ptr<const Environment> env_;
  RcnmpModel model_;
  ReplayBuffer buffer_;
  std::size_t rollouts_ = 0;
  int generation_ = 0;
  std::vector<RolloutOutcome> last_outcomes_;
  std::vector<double> last_loss_;
};

struct ExperimentResult {
  std::vector<GenerationRecord> records;
  std::vector<Trajectory> solutions;      // every solved executed rollout
  std::size_t first_solved_rollout = 0;   // 0 when never solved
  // Raw reward of every rollout in execution order, initial buffer first.
  std::vector<double> rollout_rewards;
  bool completed = false;
};

// Best raw reward among the first `rollouts` entries of rollout_rewards.
double best_within(const ExperimentResult& result, std::size_t rollouts);

// Runs until the generation cap or the budget. When `out_dir` is given the
// run directory receives config.txt, task.txt, learning_curve.csv,
// trajectories/gen_NNN_best.csv, final/ (best and last population) and
// model.txt; a COMPLETED marker is written last. On an I/O failure a
// PARTIAL marker is attempted and the error rethrown.
ExperimentResult run_experiment(
    const RunConfig& cfg, std::shared_ptr<const Environment> env,
    const std::optional<std::filesystem::path>& out_dir = std::nullopt,
    const std::function<void(const GenerationRecord&)>& on_record = {});

// Columns generation,rollouts,best_raw,mean_raw,std_raw.
void write_learning_curve(std::ostream& out, std::span<const GenerationRecord> records);

}  // namespace rcnmp
