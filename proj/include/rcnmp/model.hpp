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
#include <span>
#include <vector>

#include "rcnmp/nn.hpp"
#include "rcnmp/random.hpp"
#include "rcnmp/trajectory.hpp"

namespace rcnmp {

struct ModelConfig {
  std::size_t dim = 1;          // sensorimotor dimension d
  std::size_t latent_dim = 8;   // d_z
  std::size_t hidden = 128;
  std::size_t length = kDefaultLength;  // generation grid T
  double beta = 0.05;
  double std_floor = 1e-3;      // decoder output std
  double sigma_floor = 1e-3;    // latent std
  // CNMP-style baseline: z = mu in training and generation, no KL term.
  bool deterministic_latent = false;
  std::size_t max_observations = 10;
  std::size_t max_targets = 10;
  nn::AdamConfig adam;
};

// q(z | O, r) as a diagonal Gaussian.
struct LatentDistribution {
  std::vector<double> mu;
  std::vector<double> sigma;
};

struct LatentSample {
  std::vector<double> z;
  LatentDistribution source;
};

struct DecoderOutput {
  std::vector<double> mean;
  std::vector<double> std;
};

struct LossBreakdown {
  double total = 0.0;
  double nll = 0.0;
  double kl = 0.0;
};

// Per-network gradient buffers, shaped like the parameters.
struct ModelGradients {
  std::vector<double> encoder;
  std::vector<double> head;
  std::vector<double> decoder;
};

// Closed-form KL( N(mu, diag sigma^2) || N(0, I) ).
double kl_to_standard_normal(const LatentDistribution& dist);

// Reward-conditioned neural movement primitive. Observations (t, x, r) go
// through a shared encoder; encodings are averaged, a linear head produces
// (mu, log variance) of the latent, and the decoder maps (z, t, r) to a
// per-dimension Gaussian over x.
class RcnmpModel {
 public:
  RcnmpModel() = default;
  RcnmpModel(const ModelConfig& cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }

  const nn::Network& encoder() const { return encoder_; }
  const nn::Network& latent_head() const { return head_; }
  const nn::Network& decoder() const { return decoder_; }
  nn::Network& encoder() { return encoder_; }
  nn::Network& latent_head() { return head_; }
  nn::Network& decoder() { return decoder_; }

  // Throws std::invalid_argument on an empty observation list.
  LatentDistribution encode(std::span<const ObservationPoint> observations) const;
  DecoderOutput decode(std::span<const double> z, double t, double r) const;

  // Writes the decoder mean at out's grid indices [first, last].
  void decode_means(std::span<const double> z, double r, std::size_t first,
                    std::size_t last, Trajectory& out) const;

  // Mean NLL over targets under one reparameterized latent draw
  // z = mu + sigma * noise, plus beta * KL. When `grads` is non-null it
  // receives the exact gradient of the total (overwritten, not summed).
  LossBreakdown elbo_loss(std::span<const ObservationPoint> observations,
                          std::span<const ObservationPoint> targets,
                          std::span<const double> noise,
                          ModelGradients* grads) const;

  // One optimizer step per iteration; returns the loss of every step.
  std::vector<double> train(const ReplayBuffer& buffer, std::size_t steps,
                            Rng& rng);

  // Encode `condition`, take z = mu (deterministic) or a draw, decode the
  // mean on the grid with reward input r_target.
  Trajectory generate(std::span<const ObservationPoint> condition,
                      double r_target, bool stochastic, Rng& rng) const;
  Trajectory decode_trajectory(std::span<const double> z, double r) const;

  void save(std::ostream& out) const;
  static RcnmpModel load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static RcnmpModel load(const std::filesystem::path& path);

  std::uint64_t optimizer_steps() const { return encoder_state_.step; }

 private:
  nn::Network encoder_;
  nn::Network head_;
  nn::Network decoder_;
  nn::AdamState encoder_state_;
  nn::AdamState head_state_;
  nn::AdamState decoder_state_;
  ModelConfig cfg_;
};

LatentSample sample_latent(const LatentDistribution& dist, Rng& rng);

}  // namespace rcnmp
