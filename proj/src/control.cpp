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

#include "rcnmp/control.hpp"

#include <cmath>

namespace rcnmp {

std::pair<double, double> lambda_schedule(std::size_t step, std::size_t length,
                                          double c) {
  if (length < 2 || step >= length) {
    throw std::invalid_argument("lambda schedule step out of range");
  }
  if (!(c > 0.0)) throw std::invalid_argument("schedule sharpness must be positive");
  if (step == 0) return {0.0, 1.0};
  if (step == length - 1) return {1.0, 0.0};
  const double s = static_cast<double>(step) / static_cast<double>(length - 1);
  const double goal = std::expm1(c * s) / std::expm1(c);
  return {goal, 1.0 - goal};
}

ExecutionResult execute(const Trajectory& planned, const PDConfig& cfg) {
  const std::size_t len = planned.length();
  const std::size_t dim = planned.dim();
  if (cfg.goal.size() != dim) throw std::invalid_argument("goal dimension mismatch");
  if (!(cfg.kp > 0.0) || cfg.kd < 0.0) throw std::invalid_argument("invalid PD gains");
  const double dt = cfg.dt > 0.0 ? cfg.dt : 1.0 / static_cast<double>(len - 1);

  std::vector<double> path(len * dim);
  std::vector<double> x(planned.point(0).begin(), planned.point(0).end());
  std::vector<double> v(dim, 0.0);
  std::vector<double> e_prev(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) path[k] = x[k];

  for (std::size_t i = 1; i < len; ++i) {
    const auto [lg, lt] = cfg.fixed_lambda ? *cfg.fixed_lambda
                                           : lambda_schedule(i, len, cfg.c);
    for (std::size_t k = 0; k < dim; ++k) {
      const double e = lg * (cfg.goal[k] - x[k]) + lt * (planned.value(i, k) - x[k]);
      const double de = i == 1 ? 0.0 : (e - e_prev[k]) / dt;
      const double u = cfg.kp * e + cfg.kd * de;
      if (!std::isfinite(u)) throw ExecutionFault("non-finite control output");
      v[k] += u * dt;
      x[k] += v[k] * dt;
      e_prev[k] = e;
      path[i * dim + k] = x[k];
    }
  }

  ExecutionResult result;
  result.planned = planned;
  result.executed = Trajectory(planned.times(), std::move(path), dim);
  double err = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double diff = result.executed.value(len - 1, k) - cfg.goal[k];
    err += diff * diff;
  }
  result.goal_error = std::sqrt(err);
  return result;
}

}  // namespace rcnmp
