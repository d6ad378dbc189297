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

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "rcnmp/geometry.hpp"
#include "rcnmp/random.hpp"
#include "rcnmp/trajectory.hpp"

namespace rcnmp {

// Curve y(t) that should pass near every (t, y) target.
struct ViaPointTask {
  std::vector<Vec2> points;
  double start = 0.0;
  double goal = 0.0;
};

// Throws std::invalid_argument unless 2..5 points with strictly increasing
// t in [0.1, 0.9] and y in [-1, 1].
void validate(const ViaPointTask& task);

// -sum_i distance(point_i, curve).
double via_reward(const ViaPointTask& task, const Trajectory& traj);
// Mean distance per point, i.e. -reward / |points|.
double via_error(const ViaPointTask& task, const Trajectory& traj);

// Targets with t ~ U(0.1, 0.9) at least 0.05 apart (rejection sampling,
// at most 1000 attempts) and y ~ U(-1, 1).
ViaPointTask make_via_task(std::size_t n_points, Rng& rng);

// Planar pass between two bottles placed on the start-goal line. Distances
// in meters; radius_sum is bottle radius plus end-effector radius.
struct BottlePassTask {
  Vec2 start{0.0, 0.0};
  Vec2 goal{0.7, 0.0};
  Vec2 bottle1{0.25, 0.0};
  Vec2 bottle2{0.45, 0.0};
  double radius_sum = 0.065;

  double aperture() const;
};

// Collinear layout and a positive aperture.
void validate(const BottlePassTask& task);

struct BottleScore {
  double reward = 0.0;
  int bottles_down = 0;
  int fail = 1;  // 1 unless the path crossed the aperture
  double length = 0.0;
};

// Bottles whose closed expanded disc meets any segment of the path.
int collision_count(const BottlePassTask& task, const Trajectory& traj);
// 1 iff some segment crosses the bottle axis transversally strictly inside
// the open gap between the two expanded discs.
int crossing_indicator(const BottlePassTask& task, const Trajectory& traj);
double path_length(const Trajectory& traj);
// reward = -2 bottles_down - 4 fail - 0.15 length
BottleScore bottle_reward(const BottlePassTask& task, const Trajectory& traj);

BottlePassTask make_bottle_task();

// Which way a path goes around the first bottle: +1 on the left of the
// bottle axis (S), -1 on the right (reverse S), 0 if it never passes the
// first bottle's abscissa off-axis.
int pass_side(const BottlePassTask& task, const Trajectory& traj);

// Six curves a sin(pi t), a in {-1, -0.6, -0.2, 0.2, 0.6, 1}.
std::vector<Trajectory> make_demoset(std::size_t length = kDefaultLength);
inline constexpr double kDemoAmplitudes[] = {-1.0, -0.6, -0.2, 0.2, 0.6, 1.0};

// Task interface used by the learning loop.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> start() const = 0;
  virtual std::vector<double> goal() const = 0;
  virtual double reward(const Trajectory& traj) const = 0;
  // Reported metric (lower is better).
  virtual double error(const Trajectory& traj) const { return -reward(traj); }
  // Whether the trajectory solves the task outright.
  virtual bool solved(const Trajectory& traj) const = 0;
  virtual std::vector<Trajectory> demonstrations(std::size_t length) const;
  virtual void write_task(std::ostream& out) const = 0;

  // Linear interpolation start -> goal on the uniform grid.
  Trajectory straight_line(std::size_t length) const;
};

class ViaPointEnvironment final : public Environment {
 public:
  explicit ViaPointEnvironment(ViaPointTask task, double solved_error = 0.02);
  const ViaPointTask& task() const { return task_; }

  std::string name() const override { return "via-points"; }
  std::size_t dim() const override { return 1; }
  std::vector<double> start() const override { return {task_.start}; }
  std::vector<double> goal() const override { return {task_.goal}; }
  double reward(const Trajectory& traj) const override;
  double error(const Trajectory& traj) const override;
  bool solved(const Trajectory& traj) const override;
  void write_task(std::ostream& out) const override;

 private:
  ViaPointTask task_;
  double solved_error_;
};

class BottlePassEnvironment final : public Environment {
 public:
  explicit BottlePassEnvironment(BottlePassTask task = make_bottle_task());
  const BottlePassTask& task() const { return task_; }

  std::string name() const override { return "bottle-pass"; }
  std::size_t dim() const override { return 2; }
  std::vector<double> start() const override { return {task_.start.x, task_.start.y}; }
  std::vector<double> goal() const override { return {task_.goal.x, task_.goal.y}; }
  double reward(const Trajectory& traj) const override;
  bool solved(const Trajectory& traj) const override;
  void write_task(std::ostream& out) const override;

 private:
  BottlePassTask task_;
};

// The six-curve demonstration set; every trajectory scores 0.
class DemoEnvironment final : public Environment {
 public:
  std::string name() const override { return "demo-sampling"; }
  std::size_t dim() const override { return 1; }
  std::vector<double> start() const override { return {0.0}; }
  std::vector<double> goal() const override { return {0.0}; }
  double reward(const Trajectory&) const override { return 0.0; }
  bool solved(const Trajectory&) const override { return false; }
  std::vector<Trajectory> demonstrations(std::size_t length) const override;
  void write_task(std::ostream& out) const override;
};

// Task files are flat key = value text with a `type` key:
//   type = via-points | bottle-pass | demo-sampling
//   via-points:  start, goal, points = t,y;t,y;...
//   bottle-pass: start, goal, bottle1, bottle2 (each x,y), radius_sum
std::unique_ptr<Environment> read_task(std::istream& in);
std::unique_ptr<Environment> load_task(const std::filesystem::path& path);
void save_task(const std::filesystem::path& path, const Environment& env);

}  // namespace rcnmp
