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

#include <span>

#include "vgs/core/ops.hpp"

namespace vgs::model {

struct HingeConfig {
  double beta = 0.2;

  void validate() const;
};

/// Dot product of two unit vectors. Throws ShapeError on length mismatch.
template <typename S>
S similarity(std::span<const S> a, std::span<const S> b);

/// Batch hinge loss over unit rows audio [B, N] and images [B, N], aligned by
/// row. Every ordered non-aligned pair contributes in both directions and the
/// sum is divided by B(B-1).
template <typename S>
core::Var<S> hinge_loss(const core::Var<S>& audio, const core::Var<S>& images,
                        const HingeConfig& config = {});

}  // namespace vgs::model
