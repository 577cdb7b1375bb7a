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

#include <cstddef>
#include <string>
#include <vector>

namespace vgs::train {

enum class ScheduleKind { kCalr, kCalwr };

ScheduleKind parse_schedule_kind(const std::string& text);
std::string to_string(ScheduleKind kind);

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::kCalwr;
  double eta_max = 2e-4;
  double eta_min = 0.0;
  double t0 = 1.0;     // first warm-restart cycle, epochs
  double mult = 2.0;   // cycle growth factor
  double total_epochs = 1.0;  // single-cycle length for kCalr

  void validate() const;
};

/// eta_min + (eta_max - eta_min) * (1 + cos(pi * t_cur / t_i)) / 2.
double cosine_anneal(double eta_max, double eta_min, double t_cur, double t_i);

/// Learning rate at fractional epoch `progress` (0 = start of training).
/// kCalr anneals once over total_epochs and stays at eta_min afterwards;
/// kCalwr restarts at t0, t0 + t0*mult, ... Throws on negative progress.
double lr_at(const ScheduleConfig& config, double progress);

/// Cumulative epochs at which warm restarts happen, up to `horizon`.
std::vector<double> restart_points(const ScheduleConfig& config, double horizon);

}  // namespace vgs::train
