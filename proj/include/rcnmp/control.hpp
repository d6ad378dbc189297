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

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rcnmp/trajectory.hpp"

namespace rcnmp {

class ExecutionFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PDConfig {
  double kp = 400.0;
  double kd = 40.0;
  double c = 5.0;     // sharpness of the goal-weight schedule
  double dt = 0.0;    // 0 selects the grid spacing 1 / (T - 1)
  std::vector<double> goal;
  // Replaces the schedule with constant (lambda_goal, lambda_track).
  std::optional<std::pair<double, double>> fixed_lambda;
};

struct ExecutionResult {
  Trajectory executed;
  Trajectory planned;
  double goal_error = 0.0;
};

// (lambda_goal, lambda_track) at `step`: the goal weight rises as a
// normalized exponential from 0 at step 0 to 1 at step T - 1, the tracking
// weight is its complement.
std::pair<double, double> lambda_schedule(std::size_t step, std::size_t length,
                                          double c);

// Drives a double-integrator plant, starting at rest on the planned first
// point, with u = Kp e + Kd de/dt where
//   e = lambda_goal (g - x) + lambda_track (tau - x)
// and de/dt is a backward difference (0 on the first step). Semi-implicit
// Euler: v += u dt, x += v dt. Throws ExecutionFault on non-finite control.
ExecutionResult execute(const Trajectory& planned, const PDConfig& cfg);

}  // namespace rcnmp
