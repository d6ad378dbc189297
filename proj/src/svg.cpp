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

#include "rcnmp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <stdexcept>
#include <vector>

#include "rcnmp/commands.hpp"
#include "rcnmp/envs.hpp"
#include "rcnmp/trajectory.hpp"

namespace rcnmp {
namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgCanvas::SvgCanvas(double width, double height, Vec2 world_min, Vec2 world_max)
    : width_(width), height_(height), min_(world_min), max_(world_max) {
  if (!(max_.x > min_.x) || !(max_.y > min_.y)) {
    throw std::invalid_argument("empty SVG world box");
  }
  scale_x_ = (width_ - 2 * margin_) / (max_.x - min_.x);
  scale_y_ = (height_ - 2 * margin_) / (max_.y - min_.y);
}

double SvgCanvas::px(double x) const { return margin_ + (x - min_.x) * scale_x_; }
double SvgCanvas::py(double y) const { return height_ - margin_ - (y - min_.y) * scale_y_; }

void SvgCanvas::polyline(std::span<const Vec2> pts, const std::string& stroke, double width,
                         double opacity) {
  body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << fixed(width)
        << "\" stroke-opacity=\"" << fixed(opacity) << "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) body_ << ' ';
    body_ << fixed(px(pts[i].x)) << ',' << fixed(py(pts[i].y));
  }
  body_ << "\"/>\n";
}

void SvgCanvas::circle(Vec2 center, double radius, const std::string& fill,
                       const std::string& stroke, double opacity) {
  // Uniform scaling is not guaranteed, so draw an ellipse in pixel space.
  body_ << "<ellipse cx=\"" << fixed(px(center.x)) << "\" cy=\"" << fixed(py(center.y))
        << "\" rx=\"" << fixed(radius * scale_x_) << "\" ry=\"" << fixed(radius * scale_y_)
        << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" fill-opacity=\""
        << fixed(opacity) << "\"/>\n";
}

void SvgCanvas::dot(Vec2 center, double pixels, const std::string& fill) {
  body_ << "<circle cx=\"" << fixed(px(center.x)) << "\" cy=\"" << fixed(py(center.y))
        << "\" r=\"" << fixed(pixels) << "\" fill=\"" << fill << "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content, double size) {
  body_ << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" font-family=\"monospace\" "
        << "font-size=\"" << fixed(size) << "\">" << xml_escape(content) << "</text>\n";
}

std::string SvgCanvas::str() const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width_) << "\" height=\""
      << fixed(height_) << "\" viewBox=\"0 0 " << fixed(width_) << ' ' << fixed(height_)
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

namespace {

namespace fs = std::filesystem;

// Member files in index order.
std::vector<Trajectory> load_members(const fs::path& final_dir) {
  std::vector<fs::path> paths;
  if (fs::exists(final_dir)) {
    const std::regex pattern("member_[0-9]+\\.csv");
    for (const auto& entry : fs::directory_iterator(final_dir)) {
      if (std::regex_match(entry.path().filename().string(), pattern)) paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Trajectory> out;
  for (const auto& p : paths) out.push_back(load_trajectory(p));
  return out;
}

// Curves stored column-wise in one CSV: t, c0, c1, ...
std::vector<Trajectory> load_columns(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> times;
  std::vector<std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<double> row = parse_number_list(line);
    if (cols.empty()) cols.resize(row.size() - 1);
    if (row.size() != cols.size() + 1) throw std::runtime_error("ragged CSV " + path.string());
    times.push_back(row[0]);
    for (std::size_t k = 0; k + 1 < row.size(); ++k) cols[k].push_back(row[k + 1]);
  }
  std::vector<Trajectory> out;
  for (auto& c : cols) out.emplace_back(times, std::move(c), 1);
  return out;
}

struct Box {
  Vec2 lo{INFINITY, INFINITY};
  Vec2 hi{-INFINITY, -INFINITY};
  void add(Vec2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  void add(const Trajectory& t) {
    for (const Vec2& p : t.polyline()) add(p);
  }
  void pad(double f) {
    const Vec2 d{(hi.x - lo.x) * f + 1e-3, (hi.y - lo.y) * f + 1e-3};
    lo = lo - d;
    hi = hi + d;
  }
};

void draw_curves(SvgCanvas& svg, const std::vector<Trajectory>& curves, const std::string& color,
                 double width, double opacity) {
  for (const Trajectory& t : curves) {
    const auto pts = t.polyline();
    svg.polyline(pts, color, width, opacity);
  }
}

}  // namespace

std::string render_replay(const fs::path& run_dir) {
  const auto env = load_task(run_dir / "task.txt");
  const fs::path final_dir = run_dir / "final";
  const std::vector<Trajectory> members = load_members(final_dir);
  std::optional<Trajectory> best;
  if (fs::exists(final_dir / "best.csv")) best = load_trajectory(final_dir / "best.csv");

  Box box;
  for (const auto& m : members) box.add(m);
  if (best) box.add(*best);
  std::vector<std::string> legend;

  if (const auto* via = dynamic_cast<const ViaPointEnvironment*>(env.get())) {
    for (const Vec2& p : via->task().points) box.add(p);
    box.add(Vec2{0.0, -1.0});
    box.add(Vec2{1.0, 1.0});
    box.pad(0.05);
    SvgCanvas svg(800, 500, box.lo, box.hi);
    draw_curves(svg, members, "#4c72b0", 1.0, 0.35);
    if (best) {
      svg.polyline(best->polyline(), "#c44e52", 2.5);
      char buf[96];
      std::snprintf(buf, sizeof(buf), "best: error %.5f per point (%s)", via->error(*best),
                    via->solved(*best) ? "solved" : "not solved");
      legend.push_back(buf);
    }
    for (const Vec2& p : via->task().points) svg.dot(p, 4.0, "black");
    legend.insert(legend.begin(), "via-points, " + std::to_string(via->task().points.size()) +
                                      " targets, " + std::to_string(members.size()) + " members");
    for (std::size_t i = 0; i < legend.size(); ++i) svg.text(40, 20 + 14 * i, legend[i]);
    return svg.str();
  }

  if (const auto* bottle = dynamic_cast<const BottlePassEnvironment*>(env.get())) {
    const BottlePassTask& task = bottle->task();
    for (const Vec2 c : {task.bottle1, task.bottle2}) {
      box.add(c + Vec2{task.radius_sum, task.radius_sum});
      box.add(c - Vec2{task.radius_sum, task.radius_sum});
    }
    box.add(task.start);
    box.add(task.goal);
    box.pad(0.08);
    SvgCanvas svg(800, 500, box.lo, box.hi);
    for (const Vec2 c : {task.bottle1, task.bottle2}) {
      svg.circle(c, task.radius_sum, "#bbbbbb", "#888888", 0.6);
      svg.dot(c, 2.0, "#555555");
    }
    draw_curves(svg, members, "#4c72b0", 1.0, 0.35);
    svg.dot(task.start, 4.0, "green");
    svg.dot(task.goal, 4.0, "black");
    legend.push_back("bottle-pass, " + std::to_string(members.size()) + " members");
    if (best) {
      svg.polyline(best->polyline(), "#c44e52", 2.5);
      const BottleScore score = bottle_reward(task, *best);
      const int side = pass_side(task, *best);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "best: reward %.4f, length %.3f m", score.reward, score.length);
      legend.push_back(buf);
      legend.push_back(std::string("bottles down: ") + std::to_string(score.bottles_down) +
                       (score.bottles_down == 0 ? " (collision-free)" : ""));
      legend.push_back(std::string("aperture crossed: ") + (score.fail == 0 ? "yes" : "no"));
      legend.push_back(std::string("mode: ") +
                       (side > 0 ? "S" : side < 0 ? "reverse S" : "none"));
    }
    for (std::size_t i = 0; i < legend.size(); ++i) svg.text(40, 20 + 14 * i, legend[i]);
    return svg.str();
  }

  // Demo sampling output: demonstrations, stochastic samples, deterministic curve.
  const std::vector<Trajectory> demos = env->demonstrations(kDefaultLength);
  std::vector<Trajectory> samples;
  if (fs::exists(run_dir / "samples.csv")) samples = load_columns(run_dir / "samples.csv");
  std::vector<Trajectory> det;
  if (fs::exists(run_dir / "deterministic.csv")) det = load_columns(run_dir / "deterministic.csv");
  for (const auto& c : demos) box.add(c);
  for (const auto& c : samples) box.add(c);
  box.pad(0.05);
  SvgCanvas svg(800, 500, box.lo, box.hi);
  draw_curves(svg, demos, "#55a868", 2.0, 0.8);
  draw_curves(svg, samples, "#4c72b0", 1.0, 0.4);
  draw_curves(svg, det, "#c44e52", 2.5, 1.0);
  svg.text(40, 20, "demo-sampling: " + std::to_string(demos.size()) + " demonstrations, " +
                       std::to_string(samples.size()) + " stochastic samples");
  return svg.str();
}

}  // namespace rcnmp
