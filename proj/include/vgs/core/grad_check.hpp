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
#include <functional>
#include <string>

#include "vgs/core/param_store.hpp"

namespace vgs::core {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per parameter tensor; 0 probes every coordinate.
  /// When limited, coordinates are drawn with the seed passed to grad_check.
  std::size_t max_coords_per_param = 0;
  /// Times the step may shrink by 10x when the estimate changes with the
  /// step (a kink inside the probe interval). 0 disables refinement.
  std::size_t kink_refinements = 2;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
  /// Coordinates whose estimate needed a smaller step.
  std::size_t refined_coords = 0;
};

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences for every parameter in `store`. The error per coordinate is
/// |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check(const std::function<Var<double>()>& f,
                           ParamStore<double>& store, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace vgs::core
