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

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgs/dsp/mfcc.hpp"
#include "vgs/train/model.hpp"
#include "vgs/train/trainer.hpp"

namespace vgs::app {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a command needs: model shape, optimization, data, outputs.
struct RunConfig {
  train::ModelConfig model;
  train::TrainConfig train;
  dsp::MfccParams mfcc;
  std::filesystem::path manifest;
  std::filesystem::path cache_root;
  std::size_t threads = 1;
  std::vector<std::size_t> eval_ks{1, 5, 10};

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Names accepted by apply_preset.
std::vector<std::string> preset_names();

/// DG{G}A{N} presets set the GRU depth and latent size on top of the full
/// image network; `tiny` is a small CPU configuration. Unknown name throws.
void apply_preset(RunConfig& config, const std::string& name);

/// Sets one `key = value` field. Throws ConfigError for unknown keys or
/// values of the wrong type.
void set_field(RunConfig& config, const std::string& key, const std::string& value);

/// Flat text file of `key = value` lines; `#` starts a comment. Errors carry
/// the line number.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// Every key with its current value, one `key = value` per line.
std::string dump_config(const RunConfig& config);

}  // namespace vgs::app
