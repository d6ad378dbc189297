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

#include <atomic>
#include <cstdlib>
#include <string>

#include "rcnmp/simd/kernels.hpp"

namespace rcnmp::simd {

#if defined(RCNMP_WITH_AVX2)
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(RCNMP_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_kernels() {
  const char* requested = std::getenv("RCNMP_SIMD");
  if (requested != nullptr && std::string(requested) == "scalar") {
    return &scalar_kernels();
  }
  if (const KernelTable* avx2 = avx2_kernels()) return avx2;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_kernels()};
  return slot;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(RCNMP_WITH_AVX2)
  static const bool supported = cpu_has_avx2();
  if (supported) return &avx2_kernel_table();
#endif
  return nullptr;
}

const KernelTable& active_kernels() { return *active_slot().load(); }

bool select_kernels(std::string_view name) {
  if (name == "scalar") {
    active_slot().store(&scalar_kernels());
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* avx2 = avx2_kernels()) {
      active_slot().store(avx2);
      return true;
    }
  }
  return false;
}

}  // namespace rcnmp::simd
