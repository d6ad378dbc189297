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

#include "rcnmp/evolution.hpp"

#include <cmath>
#include <stdexcept>

#include "rcnmp/parallel.hpp"

namespace rcnmp {

std::string_view lineage_name(Lineage lineage) {
  switch (lineage) {
    case Lineage::kSampled:
      return "sampled";
    case Lineage::kCrossover:
      return "crossover";
    case Lineage::kMutatedSampled:
      return "mutated-sampled";
    case Lineage::kMutatedCrossover:
      return "mutated-crossover";
  }
  return "sampled";
}

Population spawn_population(const RcnmpModel& model,
                            std::span<const ObservationPoint> condition,
                            double r_target, std::size_t n, Rng& rng,
                            std::size_t threads) {
  if (n < 1) throw std::invalid_argument("population size must be positive");
  const LatentDistribution dist = model.encode(condition);
  const std::uint64_t base = rng();
  Population pop;
  pop.members.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng stream = make_stream(base, i);
    Member& m = pop.members[i];
    LatentSample sample = sample_latent(dist, stream);
    if (model.config().deterministic_latent) sample.z = dist.mu;
    m.trajectory = model.decode_trajectory(sample.z, r_target);
    m.lineage = Lineage::kSampled;
    m.latent = std::move(sample);
  });
  return pop;
}

std::vector<Member> crossover(const RcnmpModel& model, const Population& pop,
                              std::size_t m, double r_target, Rng& rng,
                              std::size_t threads) {
  if (m % 2 != 0) throw std::invalid_argument("crossover count must be even");
  std::vector<const std::vector<double>*> latents;
  for (const Member& member : pop.members) {
    if (member.latent) latents.push_back(&member.latent->z);
  }
  if (latents.size() < 2) {
    throw std::invalid_argument("crossover needs two latent-bearing members");
  }
  const std::size_t length = model.config().length;
  if (length < 3) throw std::invalid_argument("crossover needs T >= 3");

  std::vector<CrossoverOrigin> plan;
  plan.reserve(m);
  for (std::size_t p = 0; p < m / 2; ++p) {
    const auto pair = sample_without_replacement(rng, latents.size(), 2);
    const auto cut = static_cast<std::size_t>(
        uniform_int(rng, 1, static_cast<int>(length) - 2));
    const auto& zi = *latents[pair[0]];
    const auto& zj = *latents[pair[1]];
    plan.push_back({zi, zj, cut});
    plan.push_back({zj, zi, cut});
  }

  std::vector<Member> offspring(plan.size());
  parallel_for(plan.size(), threads, [&](std::size_t i) {
    const CrossoverOrigin& o = plan[i];
    Trajectory traj = Trajectory::zeros(length, model.config().dim);
    model.decode_means(o.head, r_target, 0, o.cut, traj);
    model.decode_means(o.tail, r_target, o.cut + 1, length - 1, traj);
    offspring[i].trajectory = std::move(traj);
    offspring[i].lineage = Lineage::kCrossover;
    offspring[i].origin = o;
  });
  return offspring;
}

std::vector<double> gaussian_kernel(double width) {
  if (width < 0.0) throw std::invalid_argument("kernel width must be non-negative");
  if (width == 0.0) return {1.0};
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * width));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double off = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-0.5 * off * off / (width * width));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

std::vector<double> smooth(std::span<const double> signal,
                           std::span<const double> kernel) {
  const auto n = static_cast<std::ptrdiff_t>(signal.size());
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> out(signal.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double weight = 0.0;
    for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
      const std::ptrdiff_t src = i + j;
      if (src < 0 || src >= n) continue;
      const double w = kernel[static_cast<std::size_t>(j + radius)];
      acc += w * signal[static_cast<std::size_t>(src)];
      weight += w;
    }
    out[static_cast<std::size_t>(i)] = acc / weight;
  }
  return out;
}

namespace {

void add_smoothed_noise(Trajectory& traj, double sigma,
                        std::span<const double> kernel, Rng& stream) {
  const std::size_t len = traj.length();
  std::vector<double> noise(len);
  for (std::size_t k = 0; k < traj.dim(); ++k) {
    for (double& e : noise) e = sigma * standard_normal(stream);
    const std::vector<double> smoothed = smooth(noise, kernel);
    for (std::size_t i = 1; i + 1 < len; ++i) traj.value(i, k) += smoothed[i];
  }
}

}  // namespace

std::vector<Trajectory> mutate(std::span<const Trajectory> trajs,
                               double sigma_task, double kernel_width, Rng& rng) {
  if (sigma_task < 0.0) throw std::invalid_argument("mutation sigma must be non-negative");
  const std::vector<double> kernel = gaussian_kernel(kernel_width);
  const std::uint64_t base = rng();
  std::vector<Trajectory> out(trajs.begin(), trajs.end());
  if (sigma_task == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Rng stream = make_stream(base, i);
    add_smoothed_noise(out[i], sigma_task, kernel, stream);
  }
  return out;
}

void mutate_members(std::vector<Member>& members, double sigma_task,
                    double kernel_width, Rng& rng) {
  if (sigma_task < 0.0) throw std::invalid_argument("mutation sigma must be non-negative");
  const std::vector<double> kernel = gaussian_kernel(kernel_width);
  const std::uint64_t base = rng();
  for (std::size_t i = 0; i < members.size(); ++i) {
    Member& m = members[i];
    if (sigma_task > 0.0) {
      Rng stream = make_stream(base, i);
      add_smoothed_noise(m.trajectory, sigma_task, kernel, stream);
    }
    m.lineage = m.lineage == Lineage::kCrossover || m.lineage == Lineage::kMutatedCrossover
                    ? Lineage::kMutatedCrossover
                    : Lineage::kMutatedSampled;
  }
}

}  // namespace rcnmp
