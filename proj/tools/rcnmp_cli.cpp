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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcnmp/commands.hpp"
#include "rcnmp/simd/kernels.hpp"

namespace fs = std::filesystem;
using namespace rcnmp;

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> generations;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> threads;
  std::string out_dir;
  std::string config;
  std::vector<std::string> sets;
  bool deterministic_latent = false;
  bool no_crossover = false;
  bool no_mutation = false;
  bool svg = false;
  bool force = false;
};

void add_common(CLI::App* app, CommonFlags& f, bool ablation_flags) {
  app->add_option("--seed", f.seed, "Master seed (default 0)");
  app->add_option("--generations", f.generations, "Generation cap");
  app->add_option("--budget", f.budget, "Rollout budget per run (0 = unlimited)");
  app->add_option("--threads", f.threads, "Worker threads for rollout execution");
  app->add_option("--out-dir", f.out_dir, "Output directory (falls back to RCNMP_OUT_DIR)");
  app->add_option("--config", f.config, "Flat key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", f.sets, "Extra key=value overrides (repeatable)");
  app->add_flag("--deterministic-latent", f.deterministic_latent, "Use z = mu, no KL term");
  if (ablation_flags) {
    app->add_flag("--no-crossover", f.no_crossover, "Disable latent crossover");
    app->add_flag("--no-mutation", f.no_mutation, "Disable task-space mutation");
  }
  app->add_flag("--svg", f.svg, "Write replay.svg into every run directory");
  app->add_flag("--force", f.force, "Overwrite a completed run");
}

fs::path resolve_out_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RCNMP_OUT_DIR"); env && *env) return fs::path(env) / fallback;
  return fs::path("runs") / fallback;
}

CommandOptions build_options(const CommonFlags& f, const RunConfig& base,
                             const std::vector<std::string>& own, const std::string& name) {
  KeyValues kv;
  if (!f.config.empty()) kv = KeyValues::load(f.config);
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value: " + s);
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (f.generations) kv.set("generations", std::to_string(*f.generations));
  if (f.budget) kv.set("budget", std::to_string(*f.budget));
  if (f.threads) kv.set("threads", std::to_string(*f.threads));
  if (f.deterministic_latent) kv.set("deterministic_latent", "true");
  if (f.no_crossover) kv.set("crossover", "false");
  if (f.no_mutation) kv.set("mutation", "false");
  CommandOptions opt = split_options(kv, base, own);
  opt.out_dir = resolve_out_dir(f.out_dir, name);
  opt.svg = f.svg;
  opt.force = f.force;
  return opt;
}

RunConfig demo_defaults() {
  RunConfig cfg;
  cfg.environment = "demo-sampling";
  cfg.init = InitMode::kDemos;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-conditioned neural movement primitives"};
  app.require_subcommand(1);

  CommonFlags demo_f, via_f, bottle_f, abl_f;
  auto* demo = app.add_subcommand("demo-sampling", "Train on the demonstration set and sample");
  add_common(demo, demo_f, false);
  auto* via = app.add_subcommand("via-points", "Random via-point tasks with 2 to 5 targets");
  add_common(via, via_f, true);
  auto* bottle = app.add_subcommand("bottle-pass", "Pass between two bottles");
  add_common(bottle, bottle_f, true);
  auto* abl = app.add_subcommand("ablate", "Full method against no-crossover and no-mutation");
  add_common(abl, abl_f, false);

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the loss gradients");
  std::uint64_t gc_seed = 0;
  std::size_t gc_draws = 10, gc_dim = 2, gc_obs = 2, gc_targets = 3;
  double gc_tol = 1e-4;
  std::string gc_out;
  gc->add_option("--seed", gc_seed, "Seed (default 0)");
  gc->add_option("--draws", gc_draws, "Random parameter draws");
  gc->add_option("--dim", gc_dim, "Sensorimotor dimension");
  gc->add_option("--observations", gc_obs, "Observation count");
  gc->add_option("--targets", gc_targets, "Target count");
  gc->add_option("--tolerance", gc_tol, "Relative error bound");
  gc->add_option("--out-dir", gc_out, "Write grad_check.csv here");

  auto* replay = app.add_subcommand("replay", "Render a stored run directory as SVG");
  std::string replay_dir, replay_out;
  replay->add_option("run-dir", replay_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  replay->add_option("-o,--output", replay_out, "SVG file (default stdout)");

  auto* info = app.add_subcommand("info", "Print the active SIMD backend");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*demo) {
      const CommandOptions opt = build_options(demo_f, demo_defaults(), {"train_steps", "samples"},
                                               "demo-sampling");
      const DemoSamplingResult r = run_demo_sampling(opt);
      std::printf("samples %zu, distinct %zu, coverage at t=0.5 %.4f\n", r.samples.size(),
                  r.distinct_samples, r.coverage_mid);
      std::printf("output %s\n", opt.out_dir->string().c_str());
    } else if (*via) {
      const CommandOptions opt =
          build_options(via_f, via_points_defaults(), {"points", "environments"}, "via-points");
      const auto runs = run_via_points(opt);
      std::size_t current = 0, solved = 0, n = 0;
      double sum = 0.0;
      auto flush = [&] {
        if (n) std::printf("points %zu: solved %zu/%zu, mean final error %.5f\n", current, solved, n, sum / n);
      };
      for (const ViaRunSummary& s : runs) {
        if (s.points != current) {
          flush();
          current = s.points;
          solved = n = 0;
          sum = 0.0;
        }
        ++n;
        solved += s.solved;
        sum += s.final_error;
      }
      flush();
      std::printf("output %s\n", opt.out_dir->string().c_str());
    } else if (*bottle) {
      const CommandOptions opt =
          build_options(bottle_f, bottle_pass_defaults(), {"seeds"}, "bottle-pass");
      const auto runs = run_bottle_pass(opt);
      std::size_t solved = 0, with_s = 0, with_r = 0;
      for (const BottleRunSummary& s : runs) {
        solved += s.solved;
        with_s += s.s_solutions > 0;
        with_r += s.reverse_solutions > 0;
      }
      std::printf("solved %zu/%zu seeds; S mode in %zu, reverse S in %zu\n", solved, runs.size(),
                  with_s, with_r);
      std::printf("output %s\n", opt.out_dir->string().c_str());
    } else if (*abl) {
      const CommandOptions opt = build_options(abl_f, via_points_defaults(),
                                               {"pairs", "points", "early_rollouts"}, "ablate");
      const AblationResult r = run_ablation(opt);
      std::size_t beat_x = 0, beat_m = 0, slow_x = 0;
      for (const AblationPair& p : r.pairs) {
        beat_x += p.final_full <= p.final_no_crossover;
        beat_m += p.final_full <= p.final_no_mutation;
        slow_x += p.early_no_crossover > p.early_full;
      }
      std::printf("full <= no-crossover %zu/%zu, full <= no-mutation %zu/%zu, "
                  "no-crossover behind at %zu rollouts %zu/%zu\n",
                  beat_x, r.pairs.size(), beat_m, r.pairs.size(), r.early_rollouts, slow_x,
                  r.pairs.size());
      std::printf("output %s\n", opt.out_dir->string().c_str());
    } else if (*gc) {
      const auto draws = run_grad_check(gc_seed, gc_draws, gc_dim, gc_obs, gc_targets, gc_tol);
      bool ok = true;
      std::ofstream csv;
      if (!gc_out.empty()) {
        fs::create_directories(gc_out);
        csv.open(fs::path(gc_out) / "grad_check.csv", std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write grad_check.csv");
        csv << "draw,encoder,head,decoder,passed\n";
      }
      for (const GradCheckDraw& d : draws) {
        ok = ok && d.passed();
        std::printf("draw %2llu  encoder %.3e  head %.3e  decoder %.3e  %s\n",
                    static_cast<unsigned long long>(d.draw), d.encoder.max_rel_error,
                    d.head.max_rel_error, d.decoder.max_rel_error, d.passed() ? "ok" : "FAIL");
        if (csv.is_open()) {
          csv << d.draw << ',' << format_double(d.encoder.max_rel_error) << ','
              << format_double(d.head.max_rel_error) << ',' << format_double(d.decoder.max_rel_error)
              << ',' << (d.passed() ? 1 : 0) << '\n';
        }
      }
      if (csv.is_open()) {
        csv.close();
        if (!csv) throw std::runtime_error("write failed: grad_check.csv");
      }
      return ok ? 0 : 1;
    } else if (*replay) {
      const std::string svg = render_replay(replay_dir);
      if (replay_out.empty()) {
        std::cout << svg;
      } else {
        std::ofstream out(replay_out, std::ios::binary);
        out << svg;
        out.close();
        if (!out) throw std::runtime_error("cannot write " + replay_out);
      }
    } else if (*info) {
      std::cout << "simd backend " << simd::active_kernels().name << "\n";
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
