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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgs/data/dataset.hpp"
#include "vgs/model/alignment.hpp"
#include "vgs/train/model.hpp"
#include "vgs/train/optimizer.hpp"
#include "vgs/train/schedule.hpp"

namespace vgs::train {

/// Raised when a batch produces a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  ScheduleConfig schedule;
  model::HingeConfig hinge;
  std::uint64_t seed = 1;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::filesystem::path log_path;        // empty: no metric log
  /// Validation R@10 after every epoch; otherwise left for post-hoc filling.
  bool eval_each_epoch = false;
  /// Extra metadata written into every checkpoint.
  std::vector<std::pair<std::string, std::string>> checkpoint_meta;

  void validate() const;
};

struct EpochStats {
  std::int64_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;  // rate used for the last step of the epoch
  std::optional<double> r10_s2i, r10_i2s;
  std::vector<double> batch_losses;
};

/// Metric log columns.
inline constexpr const char* kMetricHeader = "epoch,loss,lr,r_at_10_s2i,r_at_10_i2s";

std::filesystem::path checkpoint_name(const std::filesystem::path& dir, std::int64_t epoch);

/// Shuffled mini-batch training with the hinge objective and Adam under the
/// configured schedule. Epochs are numbered from `first_epoch`.
class Trainer {
 public:
  Trainer(AlignmentModel& model, TrainConfig config);

  /// Runs config.epochs epochs over `train`. `val` feeds optional per-epoch
  /// recall. `on_epoch` sees every epoch's statistics.
  std::vector<EpochStats> run(std::span<const data::PairItem> train,
                              std::span<const data::PairItem> val = {},
                              const std::function<void(const EpochStats&)>& on_epoch = {});

  /// Continue from a checkpoint with a fresh schedule whose peak rate is
  /// scaled by `lr_scale`; optimizer moments start from zero.
  void restart_from(const std::filesystem::path& checkpoint, double lr_scale);

  Adam<float>& optimizer() { return adam_; }
  std::int64_t first_epoch() const { return first_epoch_; }
  const TrainConfig& config() const { return config_; }

 private:
  AlignmentModel& model_;
  TrainConfig config_;
  Adam<float> adam_;
  core::Rng rng_;
  std::int64_t first_epoch_ = 1;
};

/// Appends one metric row, writing the header first if the file is new.
void append_metric_row(const std::filesystem::path& log, const EpochStats& stats);

}  // namespace vgs::train
