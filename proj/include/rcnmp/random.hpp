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

#include <cstdint>
#include <random>
#include <vector>

namespace rcnmp {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

// Child stream keyed by (base, stream). Members of a population each get
// their own stream so results do not depend on execution order.
Rng make_stream(std::uint64_t base, std::uint64_t stream);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

// Uniform integer in [lo, hi].
int uniform_int(Rng& rng, int lo, int hi);

// k distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n,
                                                    std::size_t k);

}  // namespace rcnmp
