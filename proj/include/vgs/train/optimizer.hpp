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
#include <vector>

#include "vgs/core/param_store.hpp"

namespace vgs::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over every parameter of a store. Moments are
/// kept in the store's parameter order.
template <typename S>
class Adam {
 public:
  explicit Adam(core::ParamStore<S>& store, AdamConfig config = {});

  /// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), using current grads.
  void step(double lr);
  /// Clears both moments and the step counter.
  void reset();

  std::uint64_t step_count() const { return steps_; }
  void set_step_count(std::uint64_t steps) { steps_ = steps; }
  std::vector<core::Tensor<S>>& first_moments() { return m_; }
  std::vector<core::Tensor<S>>& second_moments() { return v_; }
  const std::vector<core::Tensor<S>>& first_moments() const { return m_; }
  const std::vector<core::Tensor<S>>& second_moments() const { return v_; }
  const AdamConfig& config() const { return config_; }

 private:
  core::ParamStore<S>& store_;
  AdamConfig config_;
  std::vector<core::Tensor<S>> m_, v_;
  std::uint64_t steps_ = 0;
};

}  // namespace vgs::train
