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

#include "vgs/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vgs/core/random.hpp"

namespace vgs::core {

GradCheckResult grad_check(const std::function<Var<double>()>& f,
                           ParamStore<double>& store, std::uint64_t seed,
                           const GradCheckOptions& options) {
  store.zero_grad();
  backward(f());

  Rng rng(seed);
  GradCheckResult result;
  for (const auto& entry : store.params()) {
    Var<double> p = entry.var;
    const Tensor<double> analytic = p.grad();
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t i : coords) {
      double& slot = p.mutable_value()[i];
      const double orig = slot;
      auto central = [&](double h) {
        slot = orig + h;
        const double plus = f().item();
        slot = orig - h;
        const double minus = f().item();
        slot = orig;
        return (plus - minus) / (2.0 * h);
      };
      double numeric = central(options.step);
      // A ReLU or max-pool switch inside the probe interval makes the
      // estimate depend on the step; shrink the step until it settles.
      if (options.kink_refinements > 0) {
        double h = options.step;
        for (std::size_t r = 0; r < options.kink_refinements; ++r) {
          const double finer = central(h / 10.0);
          if (std::abs(finer - numeric) <= 1e-6 * std::max(1.0, std::abs(finer))) break;
          numeric = finer;
          h /= 10.0;
          if (r == 0) ++result.refined_coords;
        }
      }
      const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.coords_checked;
      if (err > result.max_rel_error || std::isnan(err)) {
        result.max_rel_error = std::isnan(err) ? INFINITY : err;
        result.worst_param = entry.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace vgs::core
