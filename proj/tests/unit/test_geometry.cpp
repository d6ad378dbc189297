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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "rcnmp/geometry.hpp"
#include "rcnmp/random.hpp"

namespace rcnmp {
namespace {

bool dense_hit(Vec2 a, Vec2 b, Vec2 c, double r, std::size_t samples) {
  for (std::size_t s = 0; s <= samples; ++s) {
    const double u = static_cast<double>(s) / samples;
    if (norm(a + u * (b - a) - c) <= r) return true;
  }
  return false;
}

TEST_CASE("point_segment_distance") {
  CHECK(point_segment_distance({0.5, 1.0}, {0, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(point_segment_distance({2.0, 0.0}, {0, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(point_segment_distance({-3.0, 4.0}, {0, 0}, {1, 0}) == doctest::Approx(5.0));
  CHECK(point_segment_distance({1.0, 1.0}, {0, 0}, {0, 0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("polyline helpers") {
  const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(polyline_length(square) == doctest::Approx(3.0));
  CHECK(point_polyline_distance({0.5, 0.5}, square) == doctest::Approx(0.5));
  const std::vector<Vec2> single = {{1, 1}};
  CHECK(point_polyline_distance({4, 5}, single) == doctest::Approx(5.0));
  CHECK(polyline_length(single) == 0.0);
}

TEST_CASE("segment_hits_disc edge cases") {
  const Vec2 c{0.0, 0.0};
  CHECK(segment_hits_disc({-1, 0}, {1, 0}, c, 0.5));
  CHECK_FALSE(segment_hits_disc({-1, 1}, {1, 1}, c, 0.5));
  // Tangent contact counts as a hit.
  CHECK(segment_hits_disc({-1, 0.5}, {1, 0.5}, c, 0.5));
  CHECK(segment_hits_disc({-1, 0.065}, {1, 0.065}, c, 0.065));
  // Segment entirely inside.
  CHECK(segment_hits_disc({-0.1, 0}, {0.1, 0}, c, 0.5));
  // Endpoint on the boundary.
  CHECK(segment_hits_disc({0.5, 0}, {2, 0}, c, 0.5));
  // Line passes through the disc but the segment stops short.
  CHECK_FALSE(segment_hits_disc({0.6, 0}, {2, 0}, c, 0.5));
  CHECK_FALSE(segment_hits_disc({-2, 0}, {-0.6, 0}, c, 0.5));
  // Degenerate segment.
  CHECK(segment_hits_disc({0.1, 0.1}, {0.1, 0.1}, c, 0.5));
  CHECK_FALSE(segment_hits_disc({1, 1}, {1, 1}, c, 0.5));
}

TEST_CASE("segment_hits_disc agrees with dense sampling") {
  Rng rng(77);
  int hits = 0;
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec2 a{uniform01(rng) * 2 - 1, uniform01(rng) * 2 - 1};
    const Vec2 b{uniform01(rng) * 2 - 1, uniform01(rng) * 2 - 1};
    const Vec2 c{uniform01(rng) * 2 - 1, uniform01(rng) * 2 - 1};
    const double r = 0.05 + 0.3 * uniform01(rng);
    // Skip near-tangent cases that a finite sampling cannot resolve.
    const double margin = std::abs(point_segment_distance(c, a, b) - r);
    if (margin < 1e-3) continue;
    ++checked;
    const bool exact = segment_hits_disc(a, b, c, r);
    CHECK(exact == dense_hit(a, b, c, r, 20000));
    CHECK(exact == (point_segment_distance(c, a, b) <= r));
    hits += exact;
  }
  CHECK(hits > 100);
  CHECK(checked - hits > 100);
}

}  // namespace
}  // namespace rcnmp
