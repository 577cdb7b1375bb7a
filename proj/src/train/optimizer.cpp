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

#include "vgs/train/optimizer.hpp"

#include <cmath>

namespace vgs::train {

template <typename S>
Adam<S>::Adam(core::ParamStore<S>& store, AdamConfig config) : store_(store), config_(config) {
  reset();
}

template <typename S>
void Adam<S>::reset() {
  m_.clear();
  v_.clear();
  for (const auto& e : store_.params()) {
    m_.emplace_back(e.var.shape());
    v_.emplace_back(e.var.shape());
  }
  steps_ = 0;
}

template <typename S>
void Adam<S>::step(double lr) {
  const auto& params = store_.params();
  if (params.size() != m_.size()) reset();
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    core::Var<S> var = params[p].var;
    const core::Tensor<S>& g = var.grad();
    core::Tensor<S>& theta = var.mutable_value();
    core::Tensor<S>& m = m_[p];
    core::Tensor<S>& v = v_[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i];
      const double mi = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      const double vi = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      m[i] = static_cast<S>(mi);
      v[i] = static_cast<S>(vi);
      theta[i] = static_cast<S>(theta[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + config_.eps));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace vgs::train
