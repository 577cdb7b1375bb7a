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

#include "vgs/model/alignment.hpp"

#include <stdexcept>

namespace vgs::model {

void HingeConfig::validate() const {
  if (!(beta >= 0.0)) throw std::invalid_argument("hinge margin must be non-negative");
}

template <typename S>
S similarity(std::span<const S> a, std::span<const S> b) {
  if (a.size() != b.size()) throw core::ShapeError("similarity: vector lengths differ");
  S acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename S>
core::Var<S> hinge_loss(const core::Var<S>& audio, const core::Var<S>& images,
                        const HingeConfig& config) {
  config.validate();
  if (audio.rank() != 2 || audio.shape() != images.shape()) {
    throw core::ShapeError("hinge loss expects matching [B, N] embeddings, got " +
                           core::shape_string(audio.shape()) + " and " +
                           core::shape_string(images.shape()));
  }
  return core::hinge_loss(core::matmul_nt(audio, images), static_cast<S>(config.beta));
}

template float similarity(std::span<const float>, std::span<const float>);
template double similarity(std::span<const double>, std::span<const double>);
template core::Var<float> hinge_loss(const core::Var<float>&, const core::Var<float>&,
                                     const HingeConfig&);
template core::Var<double> hinge_loss(const core::Var<double>&, const core::Var<double>&,
                                      const HingeConfig&);

}  // namespace vgs::model
