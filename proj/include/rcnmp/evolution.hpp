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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rcnmp/model.hpp"
#include "rcnmp/random.hpp"
#include "rcnmp/trajectory.hpp"

namespace rcnmp {

enum class Lineage { kSampled, kCrossover, kMutatedSampled, kMutatedCrossover };

std::string_view lineage_name(Lineage lineage);

// Parents of a crossover offspring: `head` decodes grid indices [0, cut],
// `tail` decodes [cut + 1, T - 1].
struct CrossoverOrigin {
  std::vector<double> head;
  std::vector<double> tail;
  std::size_t cut = 0;
};

struct Member {
  Trajectory trajectory;
  Lineage lineage = Lineage::kSampled;
  std::optional<LatentSample> latent;
  std::optional<CrossoverOrigin> origin;
};

struct Population {
  std::vector<Member> members;
};

// n stochastic generations from the model, each keeping its latent draw.
// Member i uses its own random stream derived from one draw of `rng`.
Population spawn_population(const RcnmpModel& model,
                            std::span<const ObservationPoint> condition,
                            double r_target, std::size_t n, Rng& rng,
                            std::size_t threads = 1);

// m offspring by temporal blending in latent space. Draws m / 2 pairs of
// distinct latent-bearing members (pairs drawn with replacement) and a cut
// k in [1, T - 2] per pair; each pair yields the (i, j) and (j, i) blends.
// Throws std::invalid_argument when fewer than two members carry a latent
// or m is odd.
std::vector<Member> crossover(const RcnmpModel& model, const Population& pop,
                              std::size_t m, double r_target, Rng& rng,
                              std::size_t threads = 1);

// Normalized Gaussian taps for a standard deviation of `width` grid steps,
// truncated at 3 standard deviations. width = 0 gives the identity tap.
std::vector<double> gaussian_kernel(double width);

// Convolution with border renormalization: taps falling outside the signal
// are dropped and the remaining taps rescaled to sum to one.
std::vector<double> smooth(std::span<const double> signal,
                           std::span<const double> kernel);

// Adds smoothed N(0, sigma^2) noise to every dimension of every trajectory.
// First and last grid points are left untouched.
std::vector<Trajectory> mutate(std::span<const Trajectory> trajs,
                               double sigma_task, double kernel_width,
                               Rng& rng);

// Mutates members in place and retags their lineage.
void mutate_members(std::vector<Member>& members, double sigma_task,
                    double kernel_width, Rng& rng);

}  // namespace rcnmp
