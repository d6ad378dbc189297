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
#include <string_view>

namespace rcnmp::simd {

// Function table for the dense inner loops. Every backend computes the same
// quantities; vector backends may differ from the scalar reference by
// floating-point reassociation only.
struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out[o] = bias[o] + dot(weight row o, x)  for a row-major out x in matrix
  void (*gemv)(const double* weight, const double* bias, const double* x,
               double* out, std::size_t rows, std::size_t cols);

  // One bias-corrected Adam update over n parameters. step_size already
  // includes the first-moment bias correction; second_correction is
  // 1 / (1 - beta2^t).
  void (*adam)(double* param, const double* grad, double* m, double* v,
               std::size_t n, double beta1, double beta2, double step_size,
               double second_correction, double eps);
};

const KernelTable& scalar_kernels();

// nullptr when the binary was built without AVX2 support or the CPU lacks
// AVX2+FMA.
const KernelTable* avx2_kernels();

// Backend used by the library. Chosen once: the RCNMP_SIMD environment
// variable ("scalar" or "avx2") wins, otherwise the best supported backend.
const KernelTable& active_kernels();

// Override the active backend for the rest of the process. Returns false if
// the requested backend is unavailable.
bool select_kernels(std::string_view name);

}  // namespace rcnmp::simd
