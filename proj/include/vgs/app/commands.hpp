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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vgs/app/run_config.hpp"
#include "vgs/data/dataset.hpp"
#include "vgs/eval/retrieval.hpp"
#include "vgs/train/trainer.hpp"

namespace vgs::app {

namespace fs = std::filesystem;

/// Environment variable consulted when data.cache_root is not set.
inline constexpr const char* kCacheRootEnv = "VGS_CACHE_ROOT";

/// data.cache_root, else $VGS_CACHE_ROOT, else `mfcc_cache` beside the manifest.
fs::path resolve_cache_root(const RunConfig& config);
fs::path data_root(const RunConfig& config);

/// `key=value;key=value` of every model.* field, stored in checkpoints.
std::string model_fields(const RunConfig& config);
/// Applies the model fields recorded in a checkpoint to `config`.
void apply_checkpoint_model(RunConfig& config, const fs::path& checkpoint);

data::CacheReport cmd_preprocess(const RunConfig& config, std::ostream& out);

struct TrainOptions {
  std::optional<fs::path> resume;
  double lr_scale = 1.0;
};

/// Validates, refreshes the cache, and trains. With zero epochs only the
/// validation runs.
std::vector<train::EpochStats> cmd_train(RunConfig config, const TrainOptions& options,
                                         std::ostream& out);

eval::RecallReport cmd_eval(RunConfig config, const fs::path& checkpoint, data::Split split);

enum class Modality { kAudio, kImage };
Modality modality_of(const fs::path& file);

struct Hit {
  std::size_t rank = 0;
  std::string pair_id;
  double score = 0.0;
};

struct QueryOptions {
  std::size_t k = 10;
  std::optional<Modality> gallery;  // default: the other modality
  std::optional<data::Split> split;  // default: every pair in the manifest
};

/// Ranks gallery items against one probe file. A k above the gallery size
/// is clamped and reported on `warn`.
std::vector<Hit> cmd_query(RunConfig config, const fs::path& checkpoint, const fs::path& probe,
                           const fs::path& gallery_manifest, const QueryOptions& options,
                           std::ostream& warn);

struct MetricRow {
  std::int64_t epoch = 0;
  std::string loss, lr, r10_s2i, r10_i2s;  // as written; recall may be empty
};

/// Parses a training log. Throws ConfigError with `file:line` on a bad
/// header, wrong field count, or non-numeric value.
std::vector<MetricRow> read_metric_log(const fs::path& log);

/// Writes `epoch,loss,lr,r_at_10_s2i,r_at_10_i2s`. With `fill_from`, rows
/// lacking recall are completed by evaluating that directory's checkpoint on
/// the validation split.
void cmd_plot_data(const RunConfig& config, const fs::path& log,
                   const std::optional<fs::path>& fill_from, std::ostream& out);

}  // namespace vgs::app
