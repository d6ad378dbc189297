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

#include "rcnmp/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rcnmp {

Trajectory::Trajectory(std::vector<double> times, std::vector<double> values,
                       std::size_t dim)
    : times_(std::move(times)), values_(std::move(values)), dim_(dim) {
  if (times_.size() < 2) {
    throw std::invalid_argument("trajectory needs at least two points");
  }
  if (dim_ == 0 || values_.size() != times_.size() * dim_) {
    throw std::invalid_argument("trajectory values do not match T x d");
  }
  if (times_.front() != 0.0 || times_.back() != 1.0) {
    throw std::invalid_argument("trajectory times must span [0, 1]");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("trajectory times must increase strictly");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("trajectory values must be finite");
    }
  }
}

std::vector<double> Trajectory::uniform_grid(std::size_t length) {
  if (length < 2) throw std::invalid_argument("grid needs two points");
  std::vector<double> grid(length);
  const double step = 1.0 / static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) grid[i] = step * static_cast<double>(i);
  grid.back() = 1.0;
  return grid;
}

Trajectory Trajectory::zeros(std::size_t length, std::size_t dim) {
  return Trajectory(uniform_grid(length), std::vector<double>(length * dim, 0.0),
                    dim);
}

Trajectory Trajectory::resampled(std::size_t length) const {
  std::vector<double> grid = uniform_grid(length);
  std::vector<double> out(length * dim_);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const double t = grid[i];
    while (seg + 2 < times_.size() && times_[seg + 1] < t) ++seg;
    const double t0 = times_[seg];
    const double t1 = times_[seg + 1];
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    for (std::size_t k = 0; k < dim_; ++k) {
      out[i * dim_ + k] =
          (1.0 - w) * value(seg, k) + w * value(seg + 1, k);
    }
  }
  return Trajectory(std::move(grid), std::move(out), dim_);
}

std::vector<Vec2> Trajectory::polyline() const {
  if (dim_ != 1 && dim_ != 2) {
    throw std::invalid_argument("planar polyline needs d = 1 or d = 2");
  }
  std::vector<Vec2> line(length());
  for (std::size_t i = 0; i < length(); ++i) {
    line[i] = dim_ == 1 ? Vec2{times_[i], value(i, 0)}
                        : Vec2{value(i, 0), value(i, 1)};
  }
  return line;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("buffer capacity must be positive");
}

std::size_t ReplayBuffer::best_index() const {
  if (entries_.empty()) throw std::logic_error("best of an empty buffer");
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].reward_raw > entries_[best].reward_raw) best = i;
  }
  return best;
}

void ReplayBuffer::push(RewardedTrajectory entry) {
  if (!entries_.empty()) {
    const Trajectory& ref = entries_.front().trajectory;
    if (ref.length() != entry.trajectory.length() ||
        ref.dim() != entry.trajectory.dim()) {
      throw std::invalid_argument("buffer entries must share T and d");
    }
  }
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) {
    const std::size_t keep = best_index();
    entries_.erase(entries_.begin() + (keep == 0 ? 1 : 0));
  }
}

std::vector<ObservationPoint> sample_observations(
    const RewardedTrajectory& traj, std::size_t n_obs, Rng& rng) {
  const Trajectory& curve = traj.trajectory;
  if (n_obs < 1 || n_obs > curve.length()) {
    throw std::invalid_argument("n_obs must lie in [1, T]");
  }
  std::vector<ObservationPoint> obs;
  obs.reserve(n_obs);
  for (std::size_t idx : sample_without_replacement(rng, curve.length(), n_obs)) {
    auto x = curve.point(idx);
    obs.push_back({curve.time(idx), {x.begin(), x.end()}, traj.reward_norm});
  }
  return obs;
}

void normalize_rewards(ReplayBuffer& buffer) {
  auto& entries = buffer.entries();
  if (entries.empty()) return;
  auto [lo, hi] = std::minmax_element(
      entries.begin(), entries.end(),
      [](const auto& a, const auto& b) { return a.reward_raw < b.reward_raw; });
  const double min = lo->reward_raw;
  const double range = hi->reward_raw - min;
  for (auto& e : entries) {
    e.reward_norm = range > 0.0 ? (e.reward_raw - min) / range : 1.0;
  }
}

void buffer_insert(ReplayBuffer& buffer, std::vector<RewardedTrajectory> batch,
                   std::size_t k_best, std::size_t k_random, Rng& rng) {
  if (k_best + k_random > batch.size()) {
    throw std::invalid_argument("k_best + k_random exceeds batch size");
  }
  std::vector<std::size_t> order(batch.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch[a].reward_raw > batch[b].reward_raw;
  });
  std::vector<std::size_t> chosen(order.begin(), order.begin() + k_best);
  const std::size_t rest = order.size() - k_best;
  for (std::size_t pick : sample_without_replacement(rng, rest, k_random)) {
    chosen.push_back(order[k_best + pick]);
  }
  for (std::size_t idx : chosen) buffer.push(std::move(batch[idx]));
  normalize_rewards(buffer);
}

double min_point_distance(const Trajectory& traj, Vec2 point) {
  const std::vector<Vec2> line = traj.polyline();
  return point_polyline_distance(point, line);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
    token.remove_prefix(1);
  }
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' ||
                            token.back() == '\r')) {
    token.remove_suffix(1);
  }
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw std::invalid_argument("malformed number: '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    parts.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

}  // namespace

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << 't';
  for (std::size_t k = 0; k < traj.dim(); ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < traj.length(); ++i) {
    out << format_double(traj.time(i));
    for (double v : traj.point(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

Trajectory read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty trajectory file");
  const auto header = split_commas(line);
  if (header.size() < 2 || header.front() != "t") {
    throw std::invalid_argument("trajectory header must start with 't'");
  }
  const std::size_t dim = header.size() - 1;
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_commas(line);
    if (cells.size() != dim + 1) {
      throw std::invalid_argument("trajectory row has wrong column count");
    }
    times.push_back(parse_double(cells[0]));
    for (std::size_t k = 1; k < cells.size(); ++k) {
      values.push_back(parse_double(cells[k]));
    }
  }
  return Trajectory(std::move(times), std::move(values), dim);
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory(out, traj);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory load_trajectory(const std::filesystem::path& path, std::size_t length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Trajectory traj = read_trajectory(in);
  if (length != 0 && traj.length() != length) return traj.resampled(length);
  return traj;
}

}  // namespace rcnmp
