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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rcnmp/geometry.hpp"
#include "rcnmp/random.hpp"

namespace rcnmp {

inline constexpr std::size_t kDefaultLength = 100;

// Time-indexed sensorimotor curve. Times are normalized to [0, 1]; values
// are stored row-major, one row of `dim()` entries per time point.
class Trajectory {
 public:
  Trajectory() = default;

  // Throws std::invalid_argument unless the invariants hold: at least two
  // points, times strictly increasing from exactly 0 to exactly 1, finite
  // values, values.size() == times.size() * dim.
  Trajectory(std::vector<double> times, std::vector<double> values,
             std::size_t dim);

  // Zero curve on the uniform grid.
  static Trajectory zeros(std::size_t length, std::size_t dim);
  static std::vector<double> uniform_grid(std::size_t length);

  std::size_t length() const { return times_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return times_.empty(); }

  const std::vector<double>& times() const { return times_; }
  double time(std::size_t i) const { return times_[i]; }

  std::span<const double> point(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> point(std::size_t i) {
    return {values_.data() + i * dim_, dim_};
  }
  double value(std::size_t i, std::size_t k) const {
    return values_[i * dim_ + k];
  }
  double& value(std::size_t i, std::size_t k) { return values_[i * dim_ + k]; }

  const std::vector<double>& values() const { return values_; }

  // Linear interpolation onto a uniform grid of `length` points.
  Trajectory resampled(std::size_t length) const;

  // Planar polyline: (t, x0) for one-dimensional curves, (x0, x1) for
  // two-dimensional ones.
  std::vector<Vec2> polyline() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
};

// One conditioning tuple (t, x, r) for the encoder.
struct ObservationPoint {
  double t = 0.0;
  std::vector<double> x;
  double r = 0.0;
};

struct RewardedTrajectory {
  Trajectory trajectory;
  double reward_raw = 0.0;
  double reward_norm = 1.0;
  int generation = 0;
};

// Experience store. Entries are kept oldest first. The entry with maximal
// raw reward is never evicted.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::vector<RewardedTrajectory>& entries() const { return entries_; }
  std::vector<RewardedTrajectory>& entries() { return entries_; }
  const RewardedTrajectory& operator[](std::size_t i) const {
    return entries_[i];
  }

  // Index of the first entry with maximal reward_raw. Requires non-empty.
  std::size_t best_index() const;
  const RewardedTrajectory& best() const { return entries_[best_index()]; }

  // Appends, then evicts the oldest non-best entries while over capacity.
  // Throws std::invalid_argument on a shape mismatch with stored entries.
  void push(RewardedTrajectory entry);

 private:
  std::vector<RewardedTrajectory> entries_;
  std::size_t capacity_;
};

// n_obs distinct grid points drawn uniformly without replacement, each
// tagged with the trajectory's normalized reward.
std::vector<ObservationPoint> sample_observations(
    const RewardedTrajectory& traj, std::size_t n_obs, Rng& rng);

// Min-max normalization of reward_norm over the current entries; a flat
// buffer maps to 1.
void normalize_rewards(ReplayBuffer& buffer);

// Inserts the k_best highest-reward members of `batch` and k_random drawn
// uniformly from the rest, then renormalizes.
void buffer_insert(ReplayBuffer& buffer, std::vector<RewardedTrajectory> batch,
                   std::size_t k_best, std::size_t k_random, Rng& rng);

// Exact distance from `point` to the trajectory polyline (segments, not only
// vertices).
double min_point_distance(const Trajectory& traj, Vec2 point);

// Text format: header "t,x0,...,x{d-1}", then one comma separated row per
// time point, written with 17 significant digits.
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);

// Loads and, when `length` is non-zero and differs, resamples to the
// uniform grid of that length.
Trajectory load_trajectory(const std::filesystem::path& path,
                           std::size_t length = 0);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace rcnmp
