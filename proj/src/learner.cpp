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

#include "rcnmp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rcnmp/parallel.hpp"

namespace rcnmp {
namespace {

enum Stream : std::uint64_t {
  kModelInit = 1,
  kTrain = 10,
  kSpawn,
  kCrossover,
  kMutate,
  kInsert,
};

Rng phase_stream(std::uint64_t seed, int generation, Stream phase) {
  return make_stream(mix_seed(seed, 1000 + static_cast<std::uint64_t>(generation)), phase);
}

std::string init_mode_name(InitMode mode) {
  return mode == InitMode::kDemos ? "demos" : "straight-line";
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "straight-line") return InitMode::kStraightLine;
  if (s == "demos") return InitMode::kDemos;
  throw std::invalid_argument("unknown init mode: " + s);
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (n_sample == 0) throw std::invalid_argument("n_sample must be positive");
  if (use_crossover && m_crossover % 2 != 0) {
    throw std::invalid_argument("m_crossover must be even");
  }
  if (use_crossover && m_crossover > 0 && n_sample < 2) {
    throw std::invalid_argument("crossover needs n_sample >= 2");
  }
  if (capacity == 0 || length < 3 || threads == 0 || latent_dim == 0 || hidden == 0) {
    throw std::invalid_argument("capacity, length, threads and sizes must be positive");
  }
  if (k_best + k_random == 0) throw std::invalid_argument("k_best + k_random must be positive");
  if (budget != 0 && budget < population_size()) {
    throw std::invalid_argument("budget must cover one generation");
  }
  if (mutation_sigma < 0.0 || mutation_kernel_width < 0.0 || mutation_decay <= 0.0) {
    throw std::invalid_argument("invalid mutation schedule");
  }
  if (!(kp > 0.0) || kd < 0.0 || !(lambda_sharpness > 0.0)) {
    throw std::invalid_argument("invalid PD configuration");
  }
  if (!(learning_rate > 0.0) || beta < 0.0) {
    throw std::invalid_argument("invalid optimizer configuration");
  }
}

double RunConfig::mutation_sigma_at(int generation) const {
  return mutation_sigma * std::pow(mutation_decay, std::max(0, generation - 1));
}

ModelConfig RunConfig::model_config(std::size_t dim) const {
  ModelConfig m;
  m.dim = dim;
  m.latent_dim = latent_dim;
  m.hidden = hidden;
  m.length = length;
  m.beta = beta;
  m.deterministic_latent = deterministic_latent;
  m.adam.lr = learning_rate;
  return m;
}

PDConfig RunConfig::pd_config(std::vector<double> goal) const {
  PDConfig pd;
  pd.kp = kp;
  pd.kd = kd;
  pd.c = lambda_sharpness;
  pd.goal = std::move(goal);
  return pd;
}

KeyValues RunConfig::to_key_values() const {
  KeyValues kv;
  kv.set("environment", environment);
  kv.set("init", init_mode_name(init));
  kv.set("seed", std::to_string(seed));
  kv.set("generations", std::to_string(generations));
  kv.set("budget", std::to_string(budget));
  kv.set("n_sample", std::to_string(n_sample));
  kv.set("m_crossover", std::to_string(m_crossover));
  kv.set("train_steps_per_gen", std::to_string(train_steps_per_gen));
  kv.set("k_best", std::to_string(k_best));
  kv.set("k_random", std::to_string(k_random));
  kv.set("capacity", std::to_string(capacity));
  kv.set("length", std::to_string(length));
  kv.set("threads", std::to_string(threads));
  kv.set("beta", format_double(beta));
  kv.set("learning_rate", format_double(learning_rate));
  kv.set("latent_dim", std::to_string(latent_dim));
  kv.set("hidden", std::to_string(hidden));
  kv.set("deterministic_latent", deterministic_latent ? "true" : "false");
  kv.set("crossover", use_crossover ? "true" : "false");
  kv.set("mutation", use_mutation ? "true" : "false");
  kv.set("mutation_sigma", format_double(mutation_sigma));
  kv.set("mutation_kernel_width", format_double(mutation_kernel_width));
  kv.set("mutation_decay", format_double(mutation_decay));
  kv.set("kp", format_double(kp));
  kv.set("kd", format_double(kd));
  kv.set("lambda_sharpness", format_double(lambda_sharpness));
  return kv;
}

RunConfig RunConfig::from_key_values(const KeyValues& kv, RunConfig base) {
  static const std::set<std::string> known = {
      "environment", "init", "seed", "generations", "budget", "n_sample",
      "m_crossover", "train_steps_per_gen", "k_best", "k_random", "capacity",
      "length", "threads", "beta", "learning_rate", "latent_dim", "hidden",
      "deterministic_latent", "crossover", "mutation", "mutation_sigma",
      "mutation_kernel_width", "mutation_decay", "kp", "kd", "lambda_sharpness"};
  for (const auto& [key, value] : kv.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw std::invalid_argument(std::string(key) + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  RunConfig c = base;
  c.environment = kv.get_string("environment", c.environment);
  c.init = parse_init_mode(kv.get_string("init", init_mode_name(c.init)));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.generations = static_cast<int>(kv.get_int("generations", c.generations));
  c.budget = count("budget", c.budget);
  c.n_sample = count("n_sample", c.n_sample);
  c.m_crossover = count("m_crossover", c.m_crossover);
  c.train_steps_per_gen = count("train_steps_per_gen", c.train_steps_per_gen);
  c.k_best = count("k_best", c.k_best);
  c.k_random = count("k_random", c.k_random);
  c.capacity = count("capacity", c.capacity);
  c.length = count("length", c.length);
  c.threads = count("threads", c.threads);
  c.beta = kv.get_double("beta", c.beta);
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.latent_dim = count("latent_dim", c.latent_dim);
  c.hidden = count("hidden", c.hidden);
  c.deterministic_latent = kv.get_bool("deterministic_latent", c.deterministic_latent);
  c.use_crossover = kv.get_bool("crossover", c.use_crossover);
  c.use_mutation = kv.get_bool("mutation", c.use_mutation);
  c.mutation_sigma = kv.get_double("mutation_sigma", c.mutation_sigma);
  c.mutation_kernel_width = kv.get_double("mutation_kernel_width", c.mutation_kernel_width);
  c.mutation_decay = kv.get_double("mutation_decay", c.mutation_decay);
  c.kp = kv.get_double("kp", c.kp);
  c.kd = kv.get_double("kd", c.kd);
  c.lambda_sharpness = kv.get_double("lambda_sharpness", c.lambda_sharpness);
  return c;
}

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
  return from_key_values(kv, RunConfig{});
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  const KeyValues kv = cfg.to_key_values();
  for (const auto& [key, value] : kv.items()) {
    out << key << " = " << value << '\n';
  }
}

ReplayBuffer init_buffer(const Environment& env, InitMode mode, std::size_t length,
                         std::size_t capacity) {
  ReplayBuffer buffer(capacity);
  std::vector<Trajectory> seeds;
  if (mode == InitMode::kStraightLine) {
    seeds.push_back(env.straight_line(length));
  } else {
    seeds = env.demonstrations(length);
    if (seeds.empty()) throw std::invalid_argument(env.name() + " provides no demonstrations");
  }
  for (Trajectory& t : seeds) {
    if (t.length() != length) t = t.resampled(length);
    RewardedTrajectory entry;
    entry.reward_raw = env.reward(t);
    entry.trajectory = std::move(t);
    entry.generation = 0;
    buffer.push(std::move(entry));
  }
  normalize_rewards(buffer);
  return buffer;
}

std::vector<ObservationPoint> start_condition(const Environment& env, double r_target) {
  return {ObservationPoint{0.0, env.start(), r_target}};
}

Learner::Learner(RunConfig cfg, std::shared_ptr<const Environment> env)
    : cfg_(std::move(cfg)), env_(std::move(env)), buffer_(cfg_.capacity) {
  cfg_.validate();
  Rng init = make_stream(cfg_.seed, kModelInit);
  model_ = RcnmpModel(cfg_.model_config(env_->dim()), init);
}

GenerationRecord Learner::make_record(std::span<const double> rewards) const {
  GenerationRecord rec;
  rec.generation = generation_;
  rec.rollouts = rollouts_;
  rec.best_raw = buffer_.best().reward_raw;
  rec.best = buffer_.best().trajectory;
  rec.executed = rewards.size();
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(std::max<std::size_t>(1, rewards.size()));
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(std::max<std::size_t>(1, rewards.size()));
  rec.mean_raw = mean;
  rec.std_raw = std::sqrt(var);
  return rec;
}

GenerationRecord Learner::initialize() {
  buffer_ = init_buffer(*env_, cfg_.init, cfg_.length, cfg_.capacity);
  generation_ = 0;
  rollouts_ = buffer_.size();
  std::vector<double> rewards;
  for (const auto& e : buffer_.entries()) rewards.push_back(e.reward_raw);
  return make_record(rewards);
}

std::optional<GenerationRecord> Learner::run_generation() {
  if (buffer_.empty()) throw std::logic_error("learner used before initialize()");
  if (cfg_.budget != 0 && rollouts_ >= cfg_.budget) return std::nullopt;
  ++generation_;
  const int g = generation_;
  constexpr double kTargetReward = 1.0;

  normalize_rewards(buffer_);
  Rng train_rng = phase_stream(cfg_.seed, g, kTrain);
  last_loss_ = model_.train(buffer_, cfg_.train_steps_per_gen, train_rng);

  const auto condition = start_condition(*env_, kTargetReward);
  const bool crossing = cfg_.use_crossover && cfg_.m_crossover > 0;
  const std::size_t n_spawn = crossing ? cfg_.n_sample : cfg_.population_size();
  Rng spawn_rng = phase_stream(cfg_.seed, g, kSpawn);
  Population pop = spawn_population(model_, condition, kTargetReward, n_spawn,
                                    spawn_rng, cfg_.threads);
  std::vector<Member> members = pop.members;
  if (crossing) {
    Rng cross_rng = phase_stream(cfg_.seed, g, kCrossover);
    std::vector<Member> kids = crossover(model_, pop, cfg_.m_crossover, kTargetReward,
                                         cross_rng, cfg_.threads);
    for (Member& k : kids) members.push_back(std::move(k));
  }
  if (cfg_.use_mutation) {
    Rng mutate_rng = phase_stream(cfg_.seed, g, kMutate);
    mutate_members(members, cfg_.mutation_sigma_at(g), cfg_.mutation_kernel_width,
                   mutate_rng);
  }

  std::size_t count = members.size();
  if (cfg_.budget != 0) count = std::min(count, cfg_.budget - rollouts_);
  const PDConfig pd = cfg_.pd_config(env_->goal());
  std::vector<RolloutOutcome> outcomes(count);
  parallel_for(count, cfg_.threads, [&](std::size_t i) {
    ExecutionResult run = execute(members[i].trajectory, pd);
    outcomes[i].reward = env_->reward(run.executed);
    outcomes[i].solved = env_->solved(run.executed);
    outcomes[i].lineage = members[i].lineage;
    outcomes[i].executed = std::move(run.executed);
  });

  std::vector<RewardedTrajectory> batch;
  std::vector<double> rewards;
  batch.reserve(count);
  for (const RolloutOutcome& o : outcomes) {
    batch.push_back({o.executed, o.reward, 0.0, g});
    rewards.push_back(o.reward);
  }
  const std::size_t k_best = std::min(cfg_.k_best, count);
  const std::size_t k_random = std::min(cfg_.k_random, count - k_best);
  Rng insert_rng = phase_stream(cfg_.seed, g, kInsert);
  buffer_insert(buffer_, std::move(batch), k_best, k_random, insert_rng);
  rollouts_ += count;
  last_outcomes_ = std::move(outcomes);
  return make_record(rewards);
}

double best_within(const ExperimentResult& result, std::size_t rollouts) {
  const std::size_t n = std::min(rollouts, result.rollout_rewards.size());
  if (n == 0) throw std::invalid_argument("no rollouts to take the best of");
  return *std::max_element(result.rollout_rewards.begin(),
                           result.rollout_rewards.begin() + static_cast<std::ptrdiff_t>(n));
}

void write_learning_curve(std::ostream& out, std::span<const GenerationRecord> records) {
  out << "generation,rollouts,best_raw,mean_raw,std_raw\n";
  for (const GenerationRecord& r : records) {
    out << r.generation << ',' << r.rollouts << ',' << fmt17(r.best_raw) << ','
        << fmt17(r.mean_raw) << ',' << fmt17(r.std_raw) << '\n';
  }
}

namespace {

void check_stream(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string gen_name(int g) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "gen_%03d_best.csv", g);
  return buf;
}

void write_final(const std::filesystem::path& dir, const Learner& learner) {
  namespace fs = std::filesystem;
  const fs::path final_dir = dir / "final";
  fs::create_directories(final_dir);
  save_trajectory(final_dir / "best.csv", learner.buffer().best().trajectory);
  const fs::path scores_path = final_dir / "scores.csv";
  std::ofstream scores(scores_path, std::ios::binary);
  scores << "member,lineage,reward,solved\n";
  const auto& outcomes = learner.last_outcomes();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "member_%03zu.csv", i);
    save_trajectory(final_dir / name, outcomes[i].executed);
    scores << i << ',' << lineage_name(outcomes[i].lineage) << ','
           << fmt17(outcomes[i].reward) << ',' << (outcomes[i].solved ? 1 : 0) << '\n';
  }
  check_stream(scores, scores_path);
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg,
                                std::shared_ptr<const Environment> env,
                                const std::optional<std::filesystem::path>& out_dir,
                                const std::function<void(const GenerationRecord&)>& on_record) {
  namespace fs = std::filesystem;
  Learner learner(cfg, env);
  ExperimentResult result;

  std::ofstream curve;
  fs::path curve_path;
  auto emit = [&](GenerationRecord rec) {
    if (out_dir) {
      save_trajectory(*out_dir / "trajectories" / gen_name(rec.generation), rec.best);
      curve << rec.generation << ',' << rec.rollouts << ',' << fmt17(rec.best_raw) << ','
            << fmt17(rec.mean_raw) << ',' << fmt17(rec.std_raw) << '\n';
      curve.flush();
      check_stream(curve, curve_path);
    }
    if (on_record) on_record(rec);
    result.records.push_back(std::move(rec));
  };

  try {
    if (out_dir) {
      fs::create_directories(*out_dir / "trajectories");
      fs::remove(*out_dir / "COMPLETED");
      fs::remove(*out_dir / "PARTIAL");
      {
        const fs::path p = *out_dir / "config.txt";
        std::ofstream cfg_out(p, std::ios::binary);
        write_config(cfg_out, cfg);
        check_stream(cfg_out, p);
      }
      save_task(*out_dir / "task.txt", *env);
      curve_path = *out_dir / "learning_curve.csv";
      curve.open(curve_path, std::ios::binary | std::ios::trunc);
      curve << "generation,rollouts,best_raw,mean_raw,std_raw\n";
      check_stream(curve, curve_path);
    }

    emit(learner.initialize());
    for (const auto& e : learner.buffer().entries()) result.rollout_rewards.push_back(e.reward_raw);
    for (int g = 0; g < cfg.generations; ++g) {
      const std::size_t before = learner.rollouts();
      std::optional<GenerationRecord> rec = learner.run_generation();
      if (!rec) break;
      const auto& outcomes = learner.last_outcomes();
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        result.rollout_rewards.push_back(outcomes[i].reward);
        if (!outcomes[i].solved) continue;
        if (result.first_solved_rollout == 0) result.first_solved_rollout = before + i + 1;
        result.solutions.push_back(outcomes[i].executed);
      }
      emit(std::move(*rec));
    }

    if (out_dir) {
      write_final(*out_dir, learner);
      learner.model().save(*out_dir / "model.txt");
      std::ofstream done(*out_dir / "COMPLETED", std::ios::binary);
      done << "generations = " << learner.generation() << '\n'
           << "rollouts = " << learner.rollouts() << '\n';
      check_stream(done, *out_dir / "COMPLETED");
    }
  } catch (const std::exception& e) {
    if (out_dir) std::ofstream(*out_dir / "PARTIAL") << e.what() << '\n';
    throw;
  }
  result.completed = true;
  return result;
}

}  // namespace rcnmp
