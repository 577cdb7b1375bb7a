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
#include <memory>
#include <string>
#include <utility>

#include "vgs/core/param_store.hpp"
#include "vgs/data/dataset.hpp"
#include "vgs/io/tensor_file.hpp"
#include "vgs/model/audio_embedder.hpp"
#include "vgs/model/image_embedder.hpp"
#include "vgs/train/optimizer.hpp"

namespace vgs::train {

struct ModelConfig {
  model::AudioEmbedderConfig audio;
  model::ImageEmbedderConfig image;

  /// Sets the shared embedding size on both branches.
  void set_latent_dim(std::size_t n);
  void validate() const;
  /// Canonical one-line description; its hash is the checkpoint fingerprint.
  std::string describe() const;
};

/// Both embedders over one float32 parameter store.
class AlignmentModel {
 public:
  explicit AlignmentModel(const ModelConfig& config);
  AlignmentModel(const AlignmentModel&) = delete;
  AlignmentModel& operator=(const AlignmentModel&) = delete;

  void initialize(std::uint64_t seed);

  /// (audio [B, N], images [B, N]) unit rows.
  std::pair<core::Var<float>, core::Var<float>> embed(const data::Batch& batch,
                                                      core::BatchNormMode mode) const;

  core::ParamStore<float>& store() { return store_; }
  const ModelConfig& config() const { return config_; }
  const model::AudioEmbedder<float>& audio() const { return *audio_; }
  const model::ImageEmbedder<float>& image() const { return *image_; }
  std::string fingerprint() const { return io::fingerprint(config_.describe()); }

 private:
  ModelConfig config_;
  core::ParamStore<float> store_;
  std::unique_ptr<model::AudioEmbedder<float>> audio_;
  std::unique_ptr<model::ImageEmbedder<float>> image_;
};

/// Eval-mode embeddings of every item, [Q, N] each, in item order.
std::pair<core::Tensor<float>, core::Tensor<float>> embed_items(
    const AlignmentModel& model, std::span<const data::PairItem> items, std::size_t batch_size = 16);

/// Eval-mode embeddings of single-modality inputs, [Q, N], in input order.
core::Tensor<float> embed_audio(const AlignmentModel& model,
                                std::span<const dsp::MfccSequence> clips,
                                std::size_t batch_size = 16);
core::Tensor<float> embed_images(const AlignmentModel& model,
                                 std::span<const model::ImageRaster> images,
                                 std::size_t batch_size = 16);

/// Parameters, BN buffers, and optionally Adam moments. `extra` meta entries
/// are stored alongside.
io::TensorFile checkpoint_contents(AlignmentModel& model, const Adam<float>* adam,
                                   std::int64_t epoch);
void save_checkpoint(const std::filesystem::path& path, AlignmentModel& model,
                     const Adam<float>* adam, std::int64_t epoch,
                     const std::vector<std::pair<std::string, std::string>>& meta = {});

/// Restores parameters and buffers (and moments when `adam` is given and the
/// file holds them). Throws io::TensorFileError on fingerprint or shape
/// mismatch. Returns the file for access to its metadata.
io::TensorFile load_checkpoint(const std::filesystem::path& path, AlignmentModel& model,
                               Adam<float>* adam = nullptr);

}  // namespace vgs::train
