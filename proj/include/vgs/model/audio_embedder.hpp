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
#include <span>
#include <string>
#include <vector>

#include "vgs/core/ops.hpp"
#include "vgs/core/param_store.hpp"
#include "vgs/core/random.hpp"
#include "vgs/dsp/mfcc.hpp"

namespace vgs::model {

struct AudioEmbedderConfig {
  std::size_t latent_dim = 1024;  // N, split evenly between GRU directions
  std::size_t gru_layers = 2;
  std::size_t input_dim = 40;
  std::size_t conv_kernels = 64;
  std::size_t conv_len = 6;
  std::size_t conv_stride = 2;
  std::size_t attention_inner = 128;

  std::size_t hidden() const { return latent_dim / 2; }
  void validate() const;
};

/// Closed-form count of trainable scalars for `config`.
std::size_t audio_param_count(const AudioEmbedderConfig& config);

/// Parameters of the additive attention: scores = V tanh(W h_t + b_w) + b_v.
template <typename S>
struct AttentionParams {
  core::Var<S> w;    // [inner, N]
  core::Var<S> b_w;  // [inner]
  core::Var<S> v;    // [N, inner]
  core::Var<S> b_v;  // [N]
};

/// Attention pooling of states [B, T, N] with per-dimension softmax weights
/// over the valid time steps of each row. Returns [B, N].
template <typename S>
core::Var<S> attention_pool(const core::Var<S>& states, std::span<const std::size_t> lengths,
                            const AttentionParams<S>& params);

template <typename S>
struct GruParams {
  core::Var<S> w_ih, w_hh, b_ih, b_hh;
};

/// Bidirectional GRU layer; forward and backward states are concatenated
/// per step into [B, T, 2h].
template <typename S>
core::Var<S> bigru_layer(const core::Var<S>& x, std::span<const std::size_t> lengths,
                         const GruParams<S>& forward, const GruParams<S>& backward);

/// Conv1d -> stacked Bi-GRU -> attention -> L2 normalization.
template <typename S>
class AudioEmbedder {
 public:
  AudioEmbedder(const AudioEmbedderConfig& config, core::ParamStore<S>& store,
                const std::string& prefix = "audio.");

  /// Conv/linear weights U(+-1/sqrt(fan_in)), GRU tensors U(+-1/sqrt(h)),
  /// attention biases zero.
  void initialize(core::Rng& rng);

  /// features [B, T, input_dim] padded to the longest row; `lengths` holds
  /// the valid frame count per row. Returns unit rows [B, N].
  core::Var<S> forward(const core::Var<S>& features, std::span<const std::size_t> lengths) const;

  /// Attention output before normalization, [B, N].
  core::Var<S> pooled(const core::Var<S>& features, std::span<const std::size_t> lengths) const;

  /// Step count seen by the recurrent stack for an input of `frames` frames.
  std::size_t recurrent_steps(std::size_t frames) const;

  const AudioEmbedderConfig& config() const { return config_; }
  const AttentionParams<S>& attention() const { return attention_; }

 private:
  AudioEmbedderConfig config_;
  core::Var<S> conv_weight_, conv_bias_;
  std::vector<std::pair<GruParams<S>, GruParams<S>>> layers_;
  AttentionParams<S> attention_;
};

/// Packs sequences into a zero-padded [B, T_max, C] tensor plus lengths.
template <typename S>
std::pair<core::Tensor<S>, std::vector<std::size_t>> pack_sequences(
    std::span<const dsp::MfccSequence* const> sequences);

/// Embeds a single sequence. Throws if it exceeds the frame cap or is shorter
/// than the convolution kernel.
template <typename S>
core::Tensor<S> embed_audio(const dsp::MfccSequence& seq, const AudioEmbedder<S>& embedder);

}  // namespace vgs::model
