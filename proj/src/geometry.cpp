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

#include "rcnmp/geometry.hpp"

#include <algorithm>
#include <limits>

namespace rcnmp {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(p - a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + s * ab));
}

double point_polyline_distance(Vec2 p, std::span<const Vec2> polyline) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  if (polyline.size() == 1) return norm(p - polyline[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    best = std::min(best, point_segment_distance(p, polyline[i], polyline[i + 1]));
  }
  return best;
}

bool segment_hits_disc(Vec2 a, Vec2 b, Vec2 center, double radius) {
  const Vec2 d = b - a;
  const Vec2 f = a - center;
  if (dot(f, f) <= radius * radius) return true;  // a inside or on the circle
  const double qa = dot(d, d);
  if (qa == 0.0) return false;
  // Quarter discriminant of |f + s d|^2 = r^2, rewritten with Lagrange's
  // identity as r^2 |d|^2 - (f x d)^2 to avoid cancellation at tangency.
  const double offset = std::abs(cross(f, d));
  const double reach = radius * std::sqrt(qa);
  if (offset > reach) return false;
  const double half_root = std::sqrt((reach - offset) * (reach + offset));
  // a is outside, so both roots share a sign; the segment reaches the disc
  // iff the smaller root lies in [0, 1].
  const double s0 = (-dot(f, d) - half_root) / qa;
  return s0 >= 0.0 && s0 <= 1.0;
}

double polyline_length(std::span<const Vec2> polyline) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    total += norm(polyline[i + 1] - polyline[i]);
  }
  return total;
}

}  // namespace rcnmp
