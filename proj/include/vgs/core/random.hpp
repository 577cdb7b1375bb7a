// Copyright 2026 The vgsalign Authors.
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
#include <string>

#include "vgs/core/tensor.hpp"

namespace vgs::core {

using Rng = std::mt19937_64;

template <typename S>
void fill_uniform(Tensor<S>& t, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = static_cast<S>(dist(rng));
}

template <typename S>
void fill_normal(Tensor<S>& t, Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  for (auto& v : t.data()) v = static_cast<S>(dist(rng));
}

/// Textual engine state, round-trippable through rng_from_string.
std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& state);

}  // namespace vgs::core
