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

#include "rcnmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rcnmp {
namespace {

using nn::Activation;
using nn::LayerShape;

nn::Network make_encoder(const ModelConfig& c) {
  return nn::Network({{c.dim + 2, c.hidden, Activation::kRelu},
                      {c.hidden, c.hidden, Activation::kRelu},
                      {c.hidden, c.hidden, Activation::kIdentity}});
}

nn::Network make_head(const ModelConfig& c) {
  return nn::Network({{c.hidden, 2 * c.latent_dim, Activation::kIdentity}});
}

nn::Network make_decoder(const ModelConfig& c) {
  return nn::Network({{c.latent_dim + 2, c.hidden, Activation::kRelu},
                      {c.hidden, c.hidden, Activation::kRelu},
                      {c.hidden, 2 * c.dim, Activation::kIdentity}});
}

std::vector<double> encoder_input(const ObservationPoint& o, std::size_t dim) {
  if (o.x.size() != dim) throw std::invalid_argument("observation dimension mismatch");
  std::vector<double> in;
  in.reserve(dim + 2);
  in.push_back(o.t);
  in.insert(in.end(), o.x.begin(), o.x.end());
  in.push_back(o.r);
  return in;
}

// Summation order for the aggregate. Sorting the observations makes the
// floating-point mean exactly invariant to the order they arrive in.
std::vector<std::size_t> canonical_order(std::span<const ObservationPoint> obs) {
  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key_less = [&](std::size_t a, std::size_t b) {
    const ObservationPoint& p = obs[a];
    const ObservationPoint& q = obs[b];
    if (p.t != q.t) return p.t < q.t;
    if (p.x != q.x) return p.x < q.x;
    return p.r < q.r;
  };
  std::sort(order.begin(), order.end(), key_less);
  return order;
}

std::vector<double> decoder_input(std::span<const double> z, double t, double r) {
  std::vector<double> in(z.begin(), z.end());
  in.push_back(t);
  in.push_back(r);
  return in;
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Latent statistics from the head output (mu, log variance).
struct LatentParts {
  LatentDistribution dist;
  std::vector<bool> clamped;
};

LatentParts latent_from_head(std::span<const double> head_out, std::size_t dz,
                             double floor) {
  LatentParts parts;
  parts.dist.mu.assign(head_out.begin(), head_out.begin() + dz);
  parts.dist.sigma.resize(dz);
  parts.clamped.resize(dz);
  for (std::size_t i = 0; i < dz; ++i) {
    const double s = std::exp(0.5 * head_out[dz + i]);
    parts.clamped[i] = !(s > floor);
    parts.dist.sigma[i] = parts.clamped[i] ? floor : s;
  }
  return parts;
}

}  // namespace

double kl_to_standard_normal(const LatentDistribution& dist) {
  double kl = 0.0;
  for (std::size_t i = 0; i < dist.mu.size(); ++i) {
    const double var = dist.sigma[i] * dist.sigma[i];
    kl += 0.5 * (dist.mu[i] * dist.mu[i] + var - 1.0 - std::log(var));
  }
  return kl;
}

LatentSample sample_latent(const LatentDistribution& dist, Rng& rng) {
  LatentSample s;
  s.z.resize(dist.mu.size());
  for (std::size_t i = 0; i < dist.mu.size(); ++i) {
    s.z[i] = dist.mu[i] + dist.sigma[i] * standard_normal(rng);
  }
  s.source = dist;
  return s;
}

RcnmpModel::RcnmpModel(const ModelConfig& cfg, Rng& rng)
    : encoder_(make_encoder(cfg)),
      head_(make_head(cfg)),
      decoder_(make_decoder(cfg)),
      cfg_(cfg) {
  encoder_.init_glorot(rng);
  head_.init_glorot(rng);
  decoder_.init_glorot(rng);
  encoder_state_ = nn::AdamState(encoder_.parameter_count());
  head_state_ = nn::AdamState(head_.parameter_count());
  decoder_state_ = nn::AdamState(decoder_.parameter_count());
}

LatentDistribution RcnmpModel::encode(
    std::span<const ObservationPoint> observations) const {
  if (observations.empty()) {
    throw std::invalid_argument("encode needs at least one observation");
  }
  std::vector<double> mean(cfg_.hidden, 0.0);
  for (std::size_t idx : canonical_order(observations)) {
    const std::vector<double> rep = encoder_.infer(encoder_input(observations[idx], cfg_.dim));
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += rep[i];
  }
  const double inv = 1.0 / static_cast<double>(observations.size());
  for (double& v : mean) v *= inv;
  return latent_from_head(head_.infer(mean), cfg_.latent_dim, cfg_.sigma_floor).dist;
}

DecoderOutput RcnmpModel::decode(std::span<const double> z, double t,
                                 double r) const {
  const std::vector<double> out = decoder_.infer(decoder_input(z, t, r));
  DecoderOutput d;
  d.mean.assign(out.begin(), out.begin() + cfg_.dim);
  d.std.resize(cfg_.dim);
  for (std::size_t k = 0; k < cfg_.dim; ++k) {
    d.std[k] = nn::activate(Activation::kSoftplus, out[cfg_.dim + k]) + cfg_.std_floor;
  }
  return d;
}

void RcnmpModel::decode_means(std::span<const double> z, double r,
                              std::size_t first, std::size_t last,
                              Trajectory& out) const {
  for (std::size_t i = first; i <= last; ++i) {
    const double t = out.time(i);
    const std::vector<double> y = decoder_.infer(decoder_input(z, t, r));
    for (std::size_t k = 0; k < cfg_.dim; ++k) out.value(i, k) = y[k];
  }
}

Trajectory RcnmpModel::decode_trajectory(std::span<const double> z, double r) const {
  Trajectory out = Trajectory::zeros(cfg_.length, cfg_.dim);
  decode_means(z, r, 0, cfg_.length - 1, out);
  return out;
}

LossBreakdown RcnmpModel::elbo_loss(std::span<const ObservationPoint> observations,
                                    std::span<const ObservationPoint> targets,
                                    std::span<const double> noise,
                                    ModelGradients* grads) const {
  if (observations.empty()) throw std::invalid_argument("elbo needs observations");
  if (targets.empty()) throw std::invalid_argument("elbo needs targets");
  const std::size_t dz = cfg_.latent_dim;
  const std::size_t d = cfg_.dim;
  if (noise.size() != dz) throw std::invalid_argument("noise size must equal d_z");
  const bool det = cfg_.deterministic_latent;

  // Encoder and aggregation.
  std::vector<nn::ForwardResult> enc;
  enc.reserve(observations.size());
  std::vector<double> mean(cfg_.hidden, 0.0);
  for (std::size_t idx : canonical_order(observations)) {
    enc.push_back(encoder_.forward(encoder_input(observations[idx], d)));
    const auto& rep = enc.back().output;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += rep[i];
  }
  const double inv_obs = 1.0 / static_cast<double>(observations.size());
  for (double& v : mean) v *= inv_obs;
  nn::ForwardResult head = head_.forward(mean);
  const LatentParts latent = latent_from_head(head.output, dz, cfg_.sigma_floor);
  const auto& mu = latent.dist.mu;
  const auto& sigma = latent.dist.sigma;

  std::vector<double> z(dz);
  for (std::size_t i = 0; i < dz; ++i) z[i] = det ? mu[i] : mu[i] + sigma[i] * noise[i];

  // Decoder likelihood.
  const double inv_tgt = 1.0 / static_cast<double>(targets.size());
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  LossBreakdown loss;
  std::vector<double> dz_total(dz, 0.0);
  if (grads != nullptr) {
    grads->encoder.assign(encoder_.parameter_count(), 0.0);
    grads->head.assign(head_.parameter_count(), 0.0);
    grads->decoder.assign(decoder_.parameter_count(), 0.0);
  }
  for (const ObservationPoint& tgt : targets) {
    if (tgt.x.size() != d) throw std::invalid_argument("target dimension mismatch");
    nn::ForwardResult dec = decoder_.forward(decoder_input(z, tgt.t, tgt.r));
    std::vector<double> upstream(2 * d);
    for (std::size_t k = 0; k < d; ++k) {
      const double m = dec.output[k];
      const double raw = dec.output[d + k];
      const double s = nn::activate(Activation::kSoftplus, raw) + cfg_.std_floor;
      const double diff = tgt.x[k] - m;
      const double var = s * s;
      loss.nll += inv_tgt * (0.5 * (log_2pi + std::log(var)) + 0.5 * diff * diff / var);
      upstream[k] = -inv_tgt * diff / var;
      upstream[d + k] = inv_tgt * (1.0 / s - diff * diff / (var * s)) * sigmoid(raw);
    }
    if (grads != nullptr) {
      const std::vector<double> din = decoder_.backward(dec.tape, upstream, grads->decoder);
      for (std::size_t i = 0; i < dz; ++i) dz_total[i] += din[i];
    }
  }

  const double beta = det ? 0.0 : cfg_.beta;
  loss.kl = det ? 0.0 : kl_to_standard_normal(latent.dist);
  loss.total = loss.nll + beta * loss.kl;
  if (grads == nullptr) return loss;

  // Through the reparameterization and the KL term to (mu, log variance).
  std::vector<double> head_up(2 * dz, 0.0);
  for (std::size_t i = 0; i < dz; ++i) {
    head_up[i] = dz_total[i] + beta * mu[i];
    if (!latent.clamped[i]) {
      const double dsigma = (det ? 0.0 : dz_total[i] * noise[i]) +
                            beta * (sigma[i] - 1.0 / sigma[i]);
      head_up[dz + i] = dsigma * 0.5 * sigma[i];
    }
  }
  std::vector<double> dmean = head_.backward(head.tape, head_up, grads->head);
  for (double& v : dmean) v *= inv_obs;
  for (nn::ForwardResult& e : enc) encoder_.backward(e.tape, dmean, grads->encoder);
  return loss;
}

std::vector<double> RcnmpModel::train(const ReplayBuffer& buffer,
                                      std::size_t steps, Rng& rng) {
  if (buffer.empty()) throw std::invalid_argument("training needs a non-empty buffer");
  std::vector<double> trace;
  trace.reserve(steps);
  ModelGradients grads;
  std::vector<double> noise(cfg_.latent_dim);
  for (std::size_t step = 0; step < steps; ++step) {
    const auto pick = static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<int>(buffer.size()) - 1));
    const RewardedTrajectory& entry = buffer[pick];
    const int len = static_cast<int>(entry.trajectory.length());
    const int n_obs = uniform_int(rng, 1, std::min<int>(cfg_.max_observations, len));
    const int n_tgt = uniform_int(rng, 1, std::min<int>(cfg_.max_targets, len));
    const auto obs = sample_observations(entry, static_cast<std::size_t>(n_obs), rng);
    const auto tgt = sample_observations(entry, static_cast<std::size_t>(n_tgt), rng);
    for (double& e : noise) e = standard_normal(rng);
    trace.push_back(elbo_loss(obs, tgt, noise, &grads).total);
    nn::adam_step(encoder_.parameters(), grads.encoder, encoder_state_, cfg_.adam);
    nn::adam_step(head_.parameters(), grads.head, head_state_, cfg_.adam);
    nn::adam_step(decoder_.parameters(), grads.decoder, decoder_state_, cfg_.adam);
  }
  return trace;
}

Trajectory RcnmpModel::generate(std::span<const ObservationPoint> condition,
                                double r_target, bool stochastic, Rng& rng) const {
  const LatentDistribution dist = encode(condition);
  const std::vector<double> z =
      stochastic && !cfg_.deterministic_latent ? sample_latent(dist, rng).z : dist.mu;
  return decode_trajectory(z, r_target);
}

void RcnmpModel::save(std::ostream& out) const {
  out << "rcnmp-model 1\n";
  out << "dim = " << cfg_.dim << '\n';
  out << "latent_dim = " << cfg_.latent_dim << '\n';
  out << "hidden = " << cfg_.hidden << '\n';
  out << "length = " << cfg_.length << '\n';
  out << "beta = " << format_double(cfg_.beta) << '\n';
  out << "std_floor = " << format_double(cfg_.std_floor) << '\n';
  out << "sigma_floor = " << format_double(cfg_.sigma_floor) << '\n';
  out << "deterministic_latent = " << (cfg_.deterministic_latent ? 1 : 0) << '\n';
  out << "max_observations = " << cfg_.max_observations << '\n';
  out << "max_targets = " << cfg_.max_targets << '\n';
  out << "lr = " << format_double(cfg_.adam.lr) << '\n';
  out << "beta1 = " << format_double(cfg_.adam.beta1) << '\n';
  out << "beta2 = " << format_double(cfg_.adam.beta2) << '\n';
  out << "eps = " << format_double(cfg_.adam.eps) << '\n';
  out << "end\n";
  nn::write_network(out, encoder_);
  nn::write_network(out, head_);
  nn::write_network(out, decoder_);
}

RcnmpModel RcnmpModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "rcnmp-model 1") {
    throw std::invalid_argument("not an rcnmp model checkpoint");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(in, line) && line != "end") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed model header line");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("missing model key ") + key);
    return it->second;
  };
  RcnmpModel model;
  ModelConfig& c = model.cfg_;
  c.dim = std::stoul(get("dim"));
  c.latent_dim = std::stoul(get("latent_dim"));
  c.hidden = std::stoul(get("hidden"));
  c.length = std::stoul(get("length"));
  c.beta = std::stod(get("beta"));
  c.std_floor = std::stod(get("std_floor"));
  c.sigma_floor = std::stod(get("sigma_floor"));
  c.deterministic_latent = get("deterministic_latent") == "1";
  c.max_observations = std::stoul(get("max_observations"));
  c.max_targets = std::stoul(get("max_targets"));
  c.adam.lr = std::stod(get("lr"));
  c.adam.beta1 = std::stod(get("beta1"));
  c.adam.beta2 = std::stod(get("beta2"));
  c.adam.eps = std::stod(get("eps"));
  model.encoder_ = nn::read_network(in);
  model.head_ = nn::read_network(in);
  model.decoder_ = nn::read_network(in);
  if (model.encoder_.layers() != make_encoder(c).layers() ||
      model.head_.layers() != make_head(c).layers() ||
      model.decoder_.layers() != make_decoder(c).layers()) {
    throw std::invalid_argument("checkpoint architecture does not match its header");
  }
  model.encoder_state_ = nn::AdamState(model.encoder_.parameter_count());
  model.head_state_ = nn::AdamState(model.head_.parameter_count());
  model.decoder_state_ = nn::AdamState(model.decoder_.parameter_count());
  return model;
}

void RcnmpModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save(out);
}

RcnmpModel RcnmpModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return load(in);
}

}  // namespace rcnmp
