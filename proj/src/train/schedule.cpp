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

#include "vgs/train/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vgs::train {

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "calr" || text == "CALR") return ScheduleKind::kCalr;
  if (text == "calwr" || text == "CALWR") return ScheduleKind::kCalwr;
  throw std::invalid_argument("unknown schedule '" + text + "' (expected calr or calwr)");
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::kCalr ? "calr" : "calwr"; }

void ScheduleConfig::validate() const {
  if (!(eta_min >= 0.0)) throw std::invalid_argument("eta_min must be >= 0");
  if (!(eta_max > eta_min)) throw std::invalid_argument("eta_max must exceed eta_min");
  if (!(t0 >= 1.0)) throw std::invalid_argument("T0 must be >= 1");
  if (!(mult >= 1.0)) throw std::invalid_argument("restart multiplier must be >= 1");
  if (kind == ScheduleKind::kCalr && !(total_epochs > 0.0)) {
    throw std::invalid_argument("CALR needs a positive epoch count");
  }
}

double cosine_anneal(double eta_max, double eta_min, double t_cur, double t_i) {
  return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(std::numbers::pi * t_cur / t_i));
}

double lr_at(const ScheduleConfig& c, double progress) {
  if (progress < 0.0 || std::isnan(progress)) {
    throw std::invalid_argument("schedule progress must be non-negative");
  }
  if (c.kind == ScheduleKind::kCalr) {
    if (progress >= c.total_epochs) return c.eta_min;
    return cosine_anneal(c.eta_max, c.eta_min, progress, c.total_epochs);
  }
  double start = 0.0, len = c.t0;
  while (progress >= start + len) {
    start += len;
    len *= c.mult;
  }
  return cosine_anneal(c.eta_max, c.eta_min, progress - start, len);
}

std::vector<double> restart_points(const ScheduleConfig& c, double horizon) {
  std::vector<double> out;
  if (c.kind == ScheduleKind::kCalr) return out;
  double start = 0.0, len = c.t0;
  while (start + len <= horizon) {
    start += len;
    out.push_back(start);
    len *= c.mult;
  }
  return out;
}

}  // namespace vgs::train
