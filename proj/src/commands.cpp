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

#include "rcnmp/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <stdexcept>

#include "rcnmp/envs.hpp"
#include "rcnmp/model.hpp"
#include "rcnmp/random.hpp"

namespace rcnmp {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void mark_completed(const fs::path& dir) {
  const fs::path p = dir / "COMPLETED";
  auto out = open_out(p);
  out << "ok\n";
  close_checked(out, p);
}

void write_svg(const fs::path& dir) {
  const std::string svg = render_replay(dir);
  const fs::path p = dir / "replay.svg";
  auto out = open_out(p);
  out << svg;
  close_checked(out, p);
}

void save_config(const fs::path& dir, const RunConfig& cfg, const KeyValues& extra) {
  const fs::path p = dir / "config.txt";
  auto out = open_out(p);
  write_config(out, cfg);
  for (const auto& [k, v] : extra.items()) out << k << " = " << v << '\n';
  close_checked(out, p);
}

std::size_t extra_count(const KeyValues& kv, const std::string& key, long long fallback) {
  const long long v = kv.get_int(key, fallback);
  if (v <= 0) throw std::invalid_argument(key + " must be positive");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> point_counts(const KeyValues& kv) {
  if (!kv.contains("points")) return {2, 3, 4, 5};
  std::vector<std::size_t> out;
  for (double v : kv.get_doubles("points")) {
    if (v < 1 || v != std::floor(v)) throw std::invalid_argument("points must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::invalid_argument("points is empty");
  return out;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(std::span<const double> v) {
  MeanStderr out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

// Curves run in lockstep under identical accounting, so generation g of
// every run shares its rollout count. Runs that stopped early are skipped
// for the rows they lack.
void write_aggregate(const fs::path& path, const std::string& label,
                     const std::vector<std::vector<GenerationRecord>>& runs,
                     const std::function<double(const GenerationRecord&)>& metric) {
  std::size_t rows = 0;
  for (const auto& r : runs) rows = std::max(rows, r.size());
  auto out = open_out(path);
  out << "generation,rollouts,mean_" << label << ",stderr_" << label << ",n\n";
  for (std::size_t g = 0; g < rows; ++g) {
    std::vector<double> vals;
    std::size_t rollouts = 0;
    for (const auto& r : runs) {
      if (g < r.size()) {
        vals.push_back(metric(r[g]));
        rollouts = r[g].rollouts;
      }
    }
    const MeanStderr ms = mean_stderr(vals);
    out << g << ',' << rollouts << ',' << format_double(ms.mean) << ','
        << format_double(ms.stderr_) << ',' << vals.size() << '\n';
  }
  close_checked(out, path);
}

std::string indexed(const char* prefix, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%02zu", prefix, i);
  return buf;
}

void write_columns(const fs::path& path, const std::vector<Trajectory>& curves,
                   const std::string& prefix) {
  auto out = open_out(path);
  out << 't';
  for (std::size_t k = 0; k < curves.size(); ++k) {
    out << ',' << (curves.size() == 1 ? prefix : indexed(prefix.c_str(), k));
  }
  out << '\n';
  const Trajectory& first = curves.front();
  for (std::size_t i = 0; i < first.length(); ++i) {
    out << format_double(first.time(i));
    for (const Trajectory& c : curves) out << ',' << format_double(c.value(i, 0));
    out << '\n';
  }
  close_checked(out, path);
}

double value_at(const Trajectory& traj, double t) {
  const auto& ts = traj.times();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  if (it == ts.begin()) return traj.value(0, 0);
  if (it == ts.end()) return traj.value(traj.length() - 1, 0);
  const std::size_t i = static_cast<std::size_t>(it - ts.begin());
  const double a = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return (1.0 - a) * traj.value(i - 1, 0) + a * traj.value(i, 0);
}

double range_ratio(double lo, double hi, double ref_lo, double ref_hi) {
  const double ref = ref_hi - ref_lo;
  return ref > 1e-12 ? (hi - lo) / ref : 0.0;
}

}  // namespace

CommandOptions split_options(const KeyValues& kv, const RunConfig& base,
                             const std::vector<std::string>& own) {
  CommandOptions opt;
  KeyValues run_kv;
  for (const auto& [k, v] : kv.items()) {
    if (std::find(own.begin(), own.end(), k) != own.end()) {
      opt.extra.set(k, v);
    } else {
      run_kv.set(k, v);
    }
  }
  opt.run = RunConfig::from_key_values(run_kv, base);
  return opt;
}

RunConfig via_points_defaults() {
  RunConfig cfg;
  cfg.environment = "via-points";
  cfg.budget = 300;
  cfg.generations = 1000;
  cfg.mutation_sigma = 2.0;
  return cfg;
}

RunConfig bottle_pass_defaults() {
  RunConfig cfg;
  cfg.environment = "bottle-pass";
  cfg.generations = 15;
  cfg.mutation_sigma = 0.6;
  return cfg;
}

void prepare_run_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir / "COMPLETED") && !force) {
    throw std::runtime_error(dir.string() + " holds a completed run; pass --force to overwrite");
  }
  fs::create_directories(dir);
  fs::remove(dir / "COMPLETED");
}

// ---- demo-sampling ----

DemoSamplingResult run_demo_sampling(const CommandOptions& opt) {
  const std::size_t steps = extra_count(opt.extra, "train_steps", 20000);
  const std::size_t n_samples = extra_count(opt.extra, "samples", 50);
  RunConfig cfg = opt.run;
  cfg.environment = "demo-sampling";
  cfg.validate();
  if (cfg.init != InitMode::kDemos) cfg.init = InitMode::kDemos;

  const DemoEnvironment env;
  const ReplayBuffer buffer = init_buffer(env, InitMode::kDemos, cfg.length, cfg.capacity);
  Rng init_rng = make_stream(cfg.seed, 1);
  RcnmpModel model(cfg.model_config(1), init_rng);
  Rng train_rng = make_stream(cfg.seed, 10);

  DemoSamplingResult res;
  if (opt.out_dir) prepare_run_dir(*opt.out_dir, opt.force);
  res.loss_trace = model.train(buffer, steps, train_rng);

  const auto cond = start_condition(env, 1.0);
  Rng sample_rng = make_stream(cfg.seed, 20);
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < n_samples; ++i) {
    res.samples.push_back(model.generate(cond, 1.0, true, sample_rng));
    distinct.insert(res.samples.back().values());
  }
  res.distinct_samples = distinct.size();
  res.deterministic = model.generate(cond, 1.0, false, sample_rng);

  const std::size_t T = cfg.length;
  res.sample_min.assign(T, INFINITY);
  res.sample_max.assign(T, -INFINITY);
  res.demo_min.assign(T, INFINITY);
  res.demo_max.assign(T, -INFINITY);
  for (std::size_t i = 0; i < T; ++i) {
    for (const Trajectory& s : res.samples) {
      res.sample_min[i] = std::min(res.sample_min[i], s.value(i, 0));
      res.sample_max[i] = std::max(res.sample_max[i], s.value(i, 0));
    }
    for (const RewardedTrajectory& d : buffer.entries()) {
      res.demo_min[i] = std::min(res.demo_min[i], d.trajectory.value(i, 0));
      res.demo_max[i] = std::max(res.demo_max[i], d.trajectory.value(i, 0));
    }
    res.coverage.push_back(
        range_ratio(res.sample_min[i], res.sample_max[i], res.demo_min[i], res.demo_max[i]));
  }
  {
    double lo = INFINITY, hi = -INFINITY, dlo = INFINITY, dhi = -INFINITY;
    for (const Trajectory& s : res.samples) {
      lo = std::min(lo, value_at(s, 0.5));
      hi = std::max(hi, value_at(s, 0.5));
    }
    for (const RewardedTrajectory& d : buffer.entries()) {
      dlo = std::min(dlo, value_at(d.trajectory, 0.5));
      dhi = std::max(dhi, value_at(d.trajectory, 0.5));
    }
    res.coverage_mid = range_ratio(lo, hi, dlo, dhi);
  }

  if (opt.out_dir) {
    const fs::path& dir = *opt.out_dir;
    save_config(dir, cfg, opt.extra);
    save_task(dir / "task.txt", env);
    write_columns(dir / "samples.csv", res.samples, "sample");
    write_columns(dir / "deterministic.csv", {res.deterministic}, "x");
    {
      const fs::path p = dir / "stats.csv";
      auto out = open_out(p);
      out << "t,demo_min,demo_max,sample_min,sample_max,coverage\n";
      for (std::size_t i = 0; i < T; ++i) {
        out << format_double(res.samples.front().time(i)) << ',' << format_double(res.demo_min[i])
            << ',' << format_double(res.demo_max[i]) << ',' << format_double(res.sample_min[i])
            << ',' << format_double(res.sample_max[i]) << ',' << format_double(res.coverage[i])
            << '\n';
      }
      close_checked(out, p);
    }
    {
      const fs::path p = dir / "learning_curve.csv";
      auto out = open_out(p);
      out << "step,loss\n";
      for (std::size_t i = 0; i < res.loss_trace.size(); ++i) {
        out << i + 1 << ',' << format_double(res.loss_trace[i]) << '\n';
      }
      close_checked(out, p);
    }
    fs::create_directories(dir / "final");
    save_trajectory(dir / "final" / "best.csv", res.deterministic);
    model.save(dir / "model.txt");
    if (opt.svg) write_svg(dir);
    mark_completed(dir);
  }
  return res;
}

// ---- via-points ----

ViaPointTask via_task_for(std::uint64_t seed, std::size_t points, std::size_t index) {
  Rng rng = make_stream(seed, 100 * points + index);
  return make_via_task(points, rng);
}

std::uint64_t via_run_seed(std::uint64_t seed, std::size_t /*points*/, std::size_t index) {
  return mix_seed(seed, index);
}

std::vector<ViaRunSummary> run_via_points(const CommandOptions& opt) {
  const std::vector<std::size_t> counts = point_counts(opt.extra);
  const std::size_t n_env = extra_count(opt.extra, "environments", 10);
  RunConfig cfg = opt.run;
  cfg.environment = "via-points";
  cfg.validate();
  if (opt.out_dir) {
    prepare_run_dir(*opt.out_dir, opt.force);
    save_config(*opt.out_dir, cfg, opt.extra);
  }

  std::vector<ViaRunSummary> out;
  for (std::size_t points : counts) {
    std::optional<fs::path> group;
    if (opt.out_dir) group = *opt.out_dir / ("points_" + std::to_string(points));
    std::vector<std::vector<GenerationRecord>> curves;
    for (std::size_t i = 0; i < n_env; ++i) {
      ViaRunSummary s;
      s.points = points;
      s.environment = i;
      s.task = via_task_for(cfg.seed, points, i);
      auto env = std::make_shared<ViaPointEnvironment>(s.task);
      RunConfig c = cfg;
      c.seed = via_run_seed(cfg.seed, points, i);
      std::optional<fs::path> dir;
      if (group) dir = *group / indexed("env", i);
      s.result = run_experiment(c, env, dir);
      if (!s.result.completed) throw std::runtime_error("via-points run did not complete");
      if (dir && opt.svg) write_svg(*dir);
      s.records = s.result.records;
      s.final_error = env->error(s.records.back().best);
      s.solved = env->solved(s.records.back().best);
      curves.push_back(s.records);
      out.push_back(std::move(s));
    }
    if (group) {
      // Per-environment errors share the geometry of the group's tasks.
      std::vector<std::vector<GenerationRecord>> errors = curves;
      for (std::size_t i = 0; i < n_env; ++i) {
        const ViaPointEnvironment env(out[out.size() - n_env + i].task);
        for (GenerationRecord& r : errors[i]) r.best_raw = env.error(r.best);
      }
      write_aggregate(*group / "aggregate.csv", "error", errors,
                      [](const GenerationRecord& r) { return r.best_raw; });
      const fs::path p = *group / "summary.csv";
      auto sum = open_out(p);
      sum << "environment,seed,final_error,solved,rollouts\n";
      for (std::size_t i = 0; i < n_env; ++i) {
        const ViaRunSummary& s = out[out.size() - n_env + i];
        sum << i << ',' << via_run_seed(cfg.seed, points, i) << ',' << format_double(s.final_error)
            << ',' << (s.solved ? 1 : 0) << ',' << s.records.back().rollouts << '\n';
      }
      close_checked(sum, p);
    }
  }
  if (opt.out_dir) mark_completed(*opt.out_dir);
  return out;
}

// ---- bottle-pass ----

std::uint64_t bottle_run_seed(std::uint64_t seed, std::size_t index) {
  return mix_seed(seed, index);
}

std::vector<BottleRunSummary> run_bottle_pass(const CommandOptions& opt) {
  const std::size_t n_seeds = extra_count(opt.extra, "seeds", 20);
  RunConfig cfg = opt.run;
  cfg.environment = "bottle-pass";
  cfg.validate();
  if (opt.out_dir) {
    prepare_run_dir(*opt.out_dir, opt.force);
    save_config(*opt.out_dir, cfg, opt.extra);
  }
  auto env = std::make_shared<BottlePassEnvironment>();
  std::vector<BottleRunSummary> out;
  std::vector<std::vector<GenerationRecord>> curves;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    BottleRunSummary s;
    s.index = i;
    s.seed = bottle_run_seed(cfg.seed, i);
    RunConfig c = cfg;
    c.seed = s.seed;
    std::optional<fs::path> dir;
    if (opt.out_dir) dir = *opt.out_dir / indexed("seed", i);
    const ExperimentResult res = run_experiment(c, env, dir);
    if (!res.completed) throw std::runtime_error("bottle-pass run did not complete");
    if (dir && opt.svg) write_svg(*dir);
    s.solved = !res.solutions.empty();
    s.first_solved_rollout = res.first_solved_rollout;
    for (const Trajectory& t : res.solutions) {
      const int side = pass_side(env->task(), t);
      s.s_solutions += side > 0;
      s.reverse_solutions += side < 0;
    }
    s.records = res.records;
    s.best_reward = res.records.back().best_raw;
    curves.push_back(s.records);
    out.push_back(std::move(s));
  }
  if (opt.out_dir) {
    write_aggregate(*opt.out_dir / "aggregate.csv", "best_reward", curves,
                    [](const GenerationRecord& r) { return r.best_raw; });
    const fs::path p = *opt.out_dir / "summary.csv";
    auto sum = open_out(p);
    sum << "seed_index,seed,solved,first_solved_rollout,s_solutions,reverse_s_solutions,best_reward\n";
    for (const BottleRunSummary& s : out) {
      sum << s.index << ',' << s.seed << ',' << (s.solved ? 1 : 0) << ',' << s.first_solved_rollout
          << ',' << s.s_solutions << ',' << s.reverse_solutions << ','
          << format_double(s.best_reward) << '\n';
    }
    close_checked(sum, p);
    mark_completed(*opt.out_dir);
  }
  return out;
}

// ---- ablate ----

AblationResult run_ablation(const CommandOptions& opt) {
  const std::size_t n_pairs = extra_count(opt.extra, "pairs", 20);
  const std::vector<std::size_t> counts = point_counts(opt.extra);
  AblationResult res;
  res.early_rollouts = extra_count(opt.extra, "early_rollouts", 100);
  RunConfig cfg = opt.run;
  cfg.environment = "via-points";
  cfg.use_crossover = true;
  cfg.use_mutation = true;
  cfg.validate();
  if (opt.out_dir) {
    prepare_run_dir(*opt.out_dir, opt.force);
    save_config(*opt.out_dir, cfg, opt.extra);
  }

  const char* labels[3] = {"full", "no_crossover", "no_mutation"};
  std::vector<std::vector<GenerationRecord>> curves[3];
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    AblationPair ap;
    ap.pair = pair;
    ap.points = counts[pair % counts.size()];
    Rng task_rng = make_stream(cfg.seed, 5000 + pair);
    auto env = std::make_shared<ViaPointEnvironment>(make_via_task(ap.points, task_rng));
    double finals[3], earlies[3];
    for (int v = 0; v < 3; ++v) {
      RunConfig c = cfg;
      c.seed = mix_seed(cfg.seed, 7000 + pair);
      c.use_crossover = v != 1;
      c.use_mutation = v != 2;
      std::optional<fs::path> dir;
      if (opt.out_dir) dir = *opt.out_dir / labels[v] / indexed("pair", pair);
      ExperimentResult r = run_experiment(c, env, dir);
      if (!r.completed) throw std::runtime_error("ablation run did not complete");
      if (dir && opt.svg) write_svg(*dir);
      finals[v] = env->error(r.records.back().best);
      earlies[v] = -best_within(r, res.early_rollouts) / static_cast<double>(ap.points);
      for (GenerationRecord& g : r.records) g.best_raw = env->error(g.best);
      curves[v].push_back(std::move(r.records));
    }
    ap.final_full = finals[0];
    ap.final_no_crossover = finals[1];
    ap.final_no_mutation = finals[2];
    ap.early_full = earlies[0];
    ap.early_no_crossover = earlies[1];
    ap.early_no_mutation = earlies[2];
    res.pairs.push_back(ap);
  }
  if (opt.out_dir) {
    for (int v = 0; v < 3; ++v) {
      write_aggregate(*opt.out_dir / (std::string(labels[v]) + ".csv"), "error", curves[v],
                      [](const GenerationRecord& r) { return r.best_raw; });
    }
    const fs::path p = *opt.out_dir / "pairs.csv";
    auto out = open_out(p);
    out << "pair,points,final_full,final_no_crossover,final_no_mutation,early_full,"
           "early_no_crossover,early_no_mutation\n";
    for (const AblationPair& a : res.pairs) {
      out << a.pair << ',' << a.points << ',' << format_double(a.final_full) << ','
          << format_double(a.final_no_crossover) << ',' << format_double(a.final_no_mutation) << ','
          << format_double(a.early_full) << ',' << format_double(a.early_no_crossover) << ','
          << format_double(a.early_no_mutation) << '\n';
    }
    close_checked(out, p);
    mark_completed(*opt.out_dir);
  }
  return res;
}

// ---- grad-check ----

double GradCheckDraw::max_rel_error() const {
  return std::max({encoder.max_rel_error, head.max_rel_error, decoder.max_rel_error});
}

std::vector<GradCheckDraw> run_grad_check(std::uint64_t seed, std::size_t draws,
                                          std::size_t dim, std::size_t observations,
                                          std::size_t targets, double tolerance) {
  std::vector<GradCheckDraw> out;
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng = make_stream(seed, d);
    ModelConfig cfg;
    cfg.dim = dim;
    RcnmpModel m(cfg, rng);
    m.encoder().init_normal(rng, 0.1);
    m.latent_head().init_normal(rng, 0.1);
    m.decoder().init_normal(rng, 0.1);
    auto random_points = [&](std::size_t n) {
      std::vector<ObservationPoint> pts;
      for (std::size_t i = 0; i < n; ++i) {
        ObservationPoint p;
        p.t = uniform01(rng);
        for (std::size_t k = 0; k < dim; ++k) p.x.push_back(standard_normal(rng));
        p.r = uniform01(rng);
        pts.push_back(std::move(p));
      }
      return pts;
    };
    const auto obs = random_points(observations);
    const auto tgt = random_points(targets);
    std::vector<double> noise(cfg.latent_dim);
    for (double& e : noise) e = standard_normal(rng);

    ModelGradients g;
    m.elbo_loss(obs, tgt, noise, &g);
    const auto loss = [&] { return m.elbo_loss(obs, tgt, noise, nullptr).total; };
    GradCheckDraw draw;
    draw.draw = d;
    draw.encoder = nn::grad_check(m.encoder().parameters(), g.encoder, loss, tolerance);
    draw.head = nn::grad_check(m.latent_head().parameters(), g.head, loss, tolerance);
    draw.decoder = nn::grad_check(m.decoder().parameters(), g.decoder, loss, tolerance);
    out.push_back(draw);
  }
  return out;
}

}  // namespace rcnmp
