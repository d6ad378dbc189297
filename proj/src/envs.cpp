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

#include "rcnmp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rcnmp/config.hpp"

namespace rcnmp {

void validate(const ViaPointTask& task) {
  const std::size_t n = task.points.size();
  if (n < 2 || n > 5) throw std::invalid_argument("via-point task needs 2 to 5 points");
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = task.points[i];
    if (p.x < 0.1 || p.x > 0.9 || p.y < -1.0 || p.y > 1.0) {
      throw std::invalid_argument("via point outside [0.1, 0.9] x [-1, 1]");
    }
    if (i > 0 && !(p.x > task.points[i - 1].x)) {
      throw std::invalid_argument("via point times must increase strictly");
    }
  }
}

double via_reward(const ViaPointTask& task, const Trajectory& traj) {
  if (traj.dim() != 1) throw std::invalid_argument("via-point reward needs d = 1");
  const std::vector<Vec2> line = traj.polyline();
  double total = 0.0;
  for (const Vec2& p : task.points) total += point_polyline_distance(p, line);
  return -total;
}

double via_error(const ViaPointTask& task, const Trajectory& traj) {
  return -via_reward(task, traj) / static_cast<double>(task.points.size());
}

ViaPointTask make_via_task(std::size_t n_points, Rng& rng) {
  if (n_points < 2 || n_points > 5) {
    throw std::invalid_argument("via-point task needs 2 to 5 points");
  }
  std::uniform_real_distribution<double> t_dist(0.1, 0.9);
  std::uniform_real_distribution<double> y_dist(-1.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> ts(n_points);
    for (double& t : ts) t = t_dist(rng);
    std::sort(ts.begin(), ts.end());
    bool spaced = true;
    for (std::size_t i = 1; i < ts.size(); ++i) spaced = spaced && ts[i] - ts[i - 1] >= 0.05;
    if (!spaced) continue;
    ViaPointTask task;
    for (double t : ts) task.points.push_back({t, y_dist(rng)});
    return task;
  }
  throw std::runtime_error("via-point sampling did not meet the spacing constraint");
}

double BottlePassTask::aperture() const {
  return norm(bottle2 - bottle1) - 2.0 * radius_sum;
}

void validate(const BottlePassTask& task) {
  const Vec2 axis = task.goal - task.start;
  const double scale = norm(axis);
  if (scale == 0.0) throw std::invalid_argument("bottle task start equals goal");
  const double tol = 1e-9 * scale * scale;
  if (std::abs(cross(axis, task.bottle1 - task.start)) > tol ||
      std::abs(cross(axis, task.bottle2 - task.start)) > tol) {
    throw std::invalid_argument("bottles must lie on the start-goal line");
  }
  if (!(task.radius_sum > 0.0) || !(task.aperture() > 0.0)) {
    throw std::invalid_argument("bottle task needs a positive aperture");
  }
}

namespace {

// Coordinates along (s) and across (q) the bottle axis, origin at bottle1.
struct AxisFrame {
  Vec2 origin;
  Vec2 along;
  Vec2 across;
  double gap_begin;
  double gap_end;

  explicit AxisFrame(const BottlePassTask& task) : origin(task.bottle1) {
    const Vec2 d = task.bottle2 - task.bottle1;
    const double len = norm(d);
    along = (1.0 / len) * d;
    across = {-along.y, along.x};
    gap_begin = task.radius_sum;
    gap_end = len - task.radius_sum;
  }
  double s(Vec2 p) const { return dot(p - origin, along); }
  double q(Vec2 p) const { return dot(p - origin, across); }
};

}  // namespace

int collision_count(const BottlePassTask& task, const Trajectory& traj) {
  const std::vector<Vec2> line = traj.polyline();
  int count = 0;
  for (const Vec2 center : {task.bottle1, task.bottle2}) {
    bool hit = false;
    if (line.size() == 1) hit = norm(line[0] - center) <= task.radius_sum;
    for (std::size_t i = 0; !hit && i + 1 < line.size(); ++i) {
      hit = segment_hits_disc(line[i], line[i + 1], center, task.radius_sum);
    }
    count += hit ? 1 : 0;
  }
  return count;
}

int crossing_indicator(const BottlePassTask& task, const Trajectory& traj) {
  const std::vector<Vec2> line = traj.polyline();
  const AxisFrame frame(task);
  // A vertex exactly on the axis between two off-axis vertices of opposite
  // sides still counts as a transversal crossing at that vertex.
  std::ptrdiff_t last_off = -1;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const double qi = frame.q(line[i]);
    if (qi == 0.0) continue;
    if (last_off >= 0) {
      const Vec2 a = line[static_cast<std::size_t>(last_off)];
      const double qa = frame.q(a);
      if ((qa > 0.0) != (qi > 0.0)) {
        double s_cross;
        if (static_cast<std::size_t>(last_off) + 1 == i) {
          const double w = qa / (qa - qi);
          s_cross = frame.s(a) + w * (frame.s(line[i]) - frame.s(a));
        } else {
          s_cross = frame.s(line[static_cast<std::size_t>(last_off) + 1]);
        }
        if (s_cross > frame.gap_begin && s_cross < frame.gap_end) return 1;
      }
    }
    last_off = static_cast<std::ptrdiff_t>(i);
  }
  return 0;
}

double path_length(const Trajectory& traj) {
  const std::vector<Vec2> line = traj.polyline();
  return polyline_length(line);
}

BottleScore bottle_reward(const BottlePassTask& task, const Trajectory& traj) {
  if (traj.dim() != 2) throw std::invalid_argument("bottle reward needs d = 2");
  BottleScore score;
  score.bottles_down = collision_count(task, traj);
  score.fail = 1 - crossing_indicator(task, traj);
  score.length = path_length(traj);
  score.reward = -2.0 * score.bottles_down - 4.0 * score.fail - 0.15 * score.length;
  return score;
}

BottlePassTask make_bottle_task() { return BottlePassTask{}; }

int pass_side(const BottlePassTask& task, const Trajectory& traj) {
  const std::vector<Vec2> line = traj.polyline();
  const AxisFrame frame(task);
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double s0 = frame.s(line[i]);
    const double s1 = frame.s(line[i + 1]);
    if ((s0 <= 0.0 && s1 >= 0.0) || (s0 >= 0.0 && s1 <= 0.0)) {
      const double w = s1 == s0 ? 0.0 : -s0 / (s1 - s0);
      const double q = frame.q(line[i]) + w * (frame.q(line[i + 1]) - frame.q(line[i]));
      if (q > 0.0) return 1;
      if (q < 0.0) return -1;
      return 0;
    }
  }
  return 0;
}

std::vector<Trajectory> make_demoset(std::size_t length) {
  const std::vector<double> grid = Trajectory::uniform_grid(length);
  std::vector<Trajectory> demos;
  for (double a : kDemoAmplitudes) {
    std::vector<double> y(length);
    for (std::size_t i = 0; i < length; ++i) y[i] = a * std::sin(std::numbers::pi * grid[i]);
    y.front() = 0.0;
    y.back() = 0.0;
    demos.emplace_back(grid, std::move(y), 1);
  }
  return demos;
}

std::vector<Trajectory> Environment::demonstrations(std::size_t) const { return {}; }

Trajectory Environment::straight_line(std::size_t length) const {
  const std::vector<double> a = start();
  const std::vector<double> b = goal();
  std::vector<double> grid = Trajectory::uniform_grid(length);
  std::vector<double> values(length * a.size());
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      values[i * a.size() + k] = a[k] + grid[i] * (b[k] - a[k]);
    }
  }
  return Trajectory(std::move(grid), std::move(values), a.size());
}

ViaPointEnvironment::ViaPointEnvironment(ViaPointTask task, double solved_error)
    : task_(std::move(task)), solved_error_(solved_error) {
  validate(task_);
}

double ViaPointEnvironment::reward(const Trajectory& traj) const {
  return via_reward(task_, traj);
}

double ViaPointEnvironment::error(const Trajectory& traj) const {
  return via_error(task_, traj);
}

bool ViaPointEnvironment::solved(const Trajectory& traj) const {
  return error(traj) < solved_error_;
}

void ViaPointEnvironment::write_task(std::ostream& out) const {
  out << "type = via-points\n";
  out << "start = " << format_double(task_.start) << '\n';
  out << "goal = " << format_double(task_.goal) << '\n';
  out << "points = ";
  for (std::size_t i = 0; i < task_.points.size(); ++i) {
    out << (i ? ";" : "") << format_double(task_.points[i].x) << ','
        << format_double(task_.points[i].y);
  }
  out << '\n';
}

BottlePassEnvironment::BottlePassEnvironment(BottlePassTask task)
    : task_(task) {
  validate(task_);
}

double BottlePassEnvironment::reward(const Trajectory& traj) const {
  return bottle_reward(task_, traj).reward;
}

bool BottlePassEnvironment::solved(const Trajectory& traj) const {
  const BottleScore s = bottle_reward(task_, traj);
  return s.bottles_down == 0 && s.fail == 0;
}

void BottlePassEnvironment::write_task(std::ostream& out) const {
  auto vec = [](Vec2 v) { return format_double(v.x) + "," + format_double(v.y); };
  out << "type = bottle-pass\n";
  out << "start = " << vec(task_.start) << '\n';
  out << "goal = " << vec(task_.goal) << '\n';
  out << "bottle1 = " << vec(task_.bottle1) << '\n';
  out << "bottle2 = " << vec(task_.bottle2) << '\n';
  out << "radius_sum = " << format_double(task_.radius_sum) << '\n';
}

std::vector<Trajectory> DemoEnvironment::demonstrations(std::size_t length) const {
  return make_demoset(length);
}

void DemoEnvironment::write_task(std::ostream& out) const {
  out << "type = demo-sampling\n";
}

namespace {

Vec2 parse_vec2(const KeyValues& kv, const std::string& key, Vec2 fallback) {
  if (!kv.contains(key)) return fallback;
  const std::vector<double> v = kv.get_doubles(key);
  if (v.size() != 2) throw std::invalid_argument(key + " must be 'x,y'");
  return {v[0], v[1]};
}

}  // namespace

std::unique_ptr<Environment> read_task(std::istream& in) {
  const KeyValues kv = KeyValues::parse(in);
  const std::string type = kv.at("type");
  if (type == "via-points") {
    ViaPointTask task;
    task.start = kv.get_double("start", 0.0);
    task.goal = kv.get_double("goal", 0.0);
    std::istringstream list(kv.at("points"));
    std::string item;
    while (std::getline(list, item, ';')) {
      const std::vector<double> p = parse_number_list(item);
      if (p.size() != 2) throw std::invalid_argument("via point must be 't,y'");
      task.points.push_back({p[0], p[1]});
    }
    return std::make_unique<ViaPointEnvironment>(task);
  }
  if (type == "bottle-pass") {
    BottlePassTask task;
    task.start = parse_vec2(kv, "start", task.start);
    task.goal = parse_vec2(kv, "goal", task.goal);
    task.bottle1 = parse_vec2(kv, "bottle1", task.bottle1);
    task.bottle2 = parse_vec2(kv, "bottle2", task.bottle2);
    task.radius_sum = kv.get_double("radius_sum", task.radius_sum);
    return std::make_unique<BottlePassEnvironment>(task);
  }
  if (type == "demo-sampling") return std::make_unique<DemoEnvironment>();
  throw std::invalid_argument("unknown task type: " + type);
}

std::unique_ptr<Environment> load_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_task(in);
}

void save_task(const std::filesystem::path& path, const Environment& env) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  env.write_task(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace rcnmp
