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

#include "vgs/core/ops.hpp"
#include "vgs/core/param_store.hpp"
#include "vgs/core/random.hpp"

namespace vgs::model {

struct ImageEmbedderConfig {
  std::size_t growth = 32;
  std::vector<std::size_t> block_config{6, 12, 64, 48};
  std::size_t bottleneck_mult = 4;
  std::size_t stem_channels = 64;
  std::size_t latent_dim = 1024;
  std::size_t input_size = 224;

  /// Channel count entering the global pooling stage.
  std::size_t feature_channels() const;
  void validate() const;
};

/// Trainable scalars of the convolutional trunk (everything before the head).
std::size_t image_backbone_param_count(const ImageEmbedderConfig& config);
/// Trunk plus the linear head, feature_channels * N + N.
std::size_t image_param_count(const ImageEmbedderConfig& config);
/// BN(c_in) + 1x1 conv to mult*growth + BN + 3x3 conv to growth.
std::size_t dense_layer_param_count(std::size_t in_channels, std::size_t growth,
                                    std::size_t bottleneck_mult = 4);
/// BN(c) + 1x1 conv to c/2.
std::size_t transition_param_count(std::size_t channels);

template <typename S>
struct BatchNorm {
  core::Var<S> gamma, beta;
  core::Tensor<S>* running_mean = nullptr;
  core::Tensor<S>* running_var = nullptr;

  static BatchNorm create(core::ParamStore<S>& store, const std::string& name,
                          std::size_t channels);
  core::Var<S> operator()(const core::Var<S>& x, core::BatchNormMode mode) const;
};

template <typename S>
struct DenseLayer {
  BatchNorm<S> norm1;
  core::Var<S> conv1;  // [mult*growth, c_in, 1, 1]
  BatchNorm<S> norm2;
  core::Var<S> conv2;  // [growth, mult*growth, 3, 3]

  static DenseLayer create(core::ParamStore<S>& store, const std::string& name,
                           std::size_t in_channels, std::size_t growth, std::size_t mult);
  /// New feature maps only, [B, growth, H, W]; callers concatenate.
  core::Var<S> operator()(const core::Var<S>& x, core::BatchNormMode mode) const;
};

template <typename S>
struct Transition {
  BatchNorm<S> norm;
  core::Var<S> conv;  // [c/2, c, 1, 1]

  /// Throws std::invalid_argument when `channels` is odd.
  static Transition create(core::ParamStore<S>& store, const std::string& name,
                           std::size_t channels);
  core::Var<S> operator()(const core::Var<S>& x, core::BatchNormMode mode) const;
};

/// DenseNet trunk with global average pooling and a linear head, producing
/// unit rows.
template <typename S>
class ImageEmbedder {
 public:
  ImageEmbedder(const ImageEmbedderConfig& config, core::ParamStore<S>& store,
                const std::string& prefix = "image.");

  /// Kaiming-normal convolutions, unit BN scale, zero BN shift and head bias.
  void initialize(core::Rng& rng);

  /// images [B, 3, S, S] with S == input_size. Returns [B, N].
  core::Var<S> forward(const core::Var<S>& images, core::BatchNormMode mode) const;

  /// Pooled trunk features before the head, [B, feature_channels].
  core::Var<S> features(const core::Var<S>& images, core::BatchNormMode mode) const;

  const ImageEmbedderConfig& config() const { return config_; }

 private:
  ImageEmbedderConfig config_;
  core::Var<S> stem_conv_;
  BatchNorm<S> stem_norm_;
  std::vector<std::vector<DenseLayer<S>>> blocks_;
  std::vector<Transition<S>> transitions_;
  BatchNorm<S> final_norm_;
  core::Var<S> head_weight_, head_bias_;
};

}  // namespace vgs::model
