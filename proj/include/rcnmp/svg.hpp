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

#include <span>
#include <sstream>
#include <string>

#include "rcnmp/geometry.hpp"

namespace rcnmp {

// Minimal SVG writer with a world-to-pixel mapping (y up). Coordinates are
// printed with fixed precision so the output is byte-stable.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height, Vec2 world_min, Vec2 world_max);

  void polyline(std::span<const Vec2> pts, const std::string& stroke, double width,
                double opacity = 1.0);
  void circle(Vec2 center, double radius, const std::string& fill,
              const std::string& stroke, double opacity = 1.0);
  void dot(Vec2 center, double pixels, const std::string& fill);
  // Text at pixel position, counted from the top-left corner.
  void text(double px, double py, const std::string& content, double size = 12.0);

  std::string str() const;

 private:
  double px(double x) const;
  double py(double y) const;

  double width_;
  double height_;
  double margin_ = 30.0;
  Vec2 min_;
  Vec2 max_;
  double scale_x_;
  double scale_y_;
  std::ostringstream body_;
};

}  // namespace rcnmp
