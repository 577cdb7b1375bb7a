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

#include "vgs/model/audio_embedder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vgs::model {

using core::Tensor;
using core::Var;

void AudioEmbedderConfig::validate() const {
  if (latent_dim == 0 || latent_dim % 2 != 0) {
    throw std::invalid_argument("audio latent dimension must be even and positive");
  }
  if (gru_layers < 1) throw std::invalid_argument("audio embedder needs at least one GRU layer");
  if (input_dim == 0 || conv_kernels == 0 || conv_len == 0 || conv_stride == 0) {
    throw std::invalid_argument("audio convolution sizes must be positive");
  }
  if (attention_inner != 128) throw std::invalid_argument("attention inner size is fixed at 128");
}

std::size_t audio_param_count(const AudioEmbedderConfig& c) {
  const std::size_t h = c.hidden();
  std::size_t n = c.input_dim * c.conv_kernels * c.conv_len + c.conv_kernels;
  std::size_t din = c.conv_kernels;
  for (std::size_t l = 0; l < c.gru_layers; ++l) {
    n += 2 * 3 * (din * h + h * h + 2 * h);
    din = c.latent_dim;
  }
  n += c.attention_inner * c.latent_dim + c.attention_inner;
  n += c.latent_dim * c.attention_inner + c.latent_dim;
  return n;
}

template <typename S>
Var<S> attention_pool(const Var<S>& states, std::span<const std::size_t> lengths,
                      const AttentionParams<S>& p) {
  const Var<S> hidden = core::tanh_op(core::linear(states, p.w, p.b_w));
  const Var<S> scores = core::linear(hidden, p.v, p.b_v);
  const Var<S> alpha = core::masked_time_softmax(scores, lengths);
  return core::sum_axis(core::mul(alpha, states), 1);
}

template <typename S>
Var<S> bigru_layer(const Var<S>& x, std::span<const std::size_t> lengths,
                   const GruParams<S>& fwd, const GruParams<S>& bwd) {
  Var<S> f = core::gru_direction(x, lengths, fwd.w_ih, fwd.w_hh, fwd.b_ih, fwd.b_hh, false);
  Var<S> b = core::gru_direction(x, lengths, bwd.w_ih, bwd.w_hh, bwd.b_ih, bwd.b_hh, true);
  return core::concat<S>({f, b}, 2);
}

template <typename S>
AudioEmbedder<S>::AudioEmbedder(const AudioEmbedderConfig& config, core::ParamStore<S>& store,
                                const std::string& prefix)
    : config_(config) {
  config_.validate();
  const std::size_t h = config_.hidden();
  const std::size_t n = config_.latent_dim;
  conv_weight_ = store.add(prefix + "conv.weight",
                           Tensor<S>({config_.conv_kernels, config_.input_dim, config_.conv_len}));
  conv_bias_ = store.add(prefix + "conv.bias", Tensor<S>({config_.conv_kernels}));
  std::size_t din = config_.conv_kernels;
  for (std::size_t l = 0; l < config_.gru_layers; ++l) {
    auto make = [&](const std::string& dir) {
      const std::string base = prefix + "gru" + std::to_string(l) + "." + dir + ".";
      return GruParams<S>{store.add(base + "w_ih", Tensor<S>({3 * h, din})),
                          store.add(base + "w_hh", Tensor<S>({3 * h, h})),
                          store.add(base + "b_ih", Tensor<S>({3 * h})),
                          store.add(base + "b_hh", Tensor<S>({3 * h}))};
    };
    auto f = make("fwd");
    auto b = make("bwd");
    layers_.emplace_back(std::move(f), std::move(b));
    din = n;
  }
  const std::size_t inner = config_.attention_inner;
  attention_.w = store.add(prefix + "attn.W", Tensor<S>({inner, n}));
  attention_.b_w = store.add(prefix + "attn.b_w", Tensor<S>({inner}));
  attention_.v = store.add(prefix + "attn.V", Tensor<S>({n, inner}));
  attention_.b_v = store.add(prefix + "attn.b_v", Tensor<S>({n}));
}

template <typename S>
void AudioEmbedder<S>::initialize(core::Rng& rng) {
  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(config_.input_dim * config_.conv_len));
  core::fill_uniform(conv_weight_.mutable_value(), rng, -conv_bound, conv_bound);
  core::fill_uniform(conv_bias_.mutable_value(), rng, -conv_bound, conv_bound);
  const double gru_bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden()));
  for (auto& [f, b] : layers_) {
    for (GruParams<S>* p : {&f, &b}) {
      for (Var<S>* v : {&p->w_ih, &p->w_hh, &p->b_ih, &p->b_hh}) {
        core::fill_uniform(v->mutable_value(), rng, -gru_bound, gru_bound);
      }
    }
  }
  const double w_bound = 1.0 / std::sqrt(static_cast<double>(config_.latent_dim));
  const double v_bound = 1.0 / std::sqrt(static_cast<double>(config_.attention_inner));
  core::fill_uniform(attention_.w.mutable_value(), rng, -w_bound, w_bound);
  core::fill_uniform(attention_.v.mutable_value(), rng, -v_bound, v_bound);
  attention_.b_w.mutable_value().fill(S{0});
  attention_.b_v.mutable_value().fill(S{0});
}

template <typename S>
std::size_t AudioEmbedder<S>::recurrent_steps(std::size_t frames) const {
  return core::conv1d_output_length(frames, config_.conv_len, config_.conv_stride);
}

template <typename S>
Var<S> AudioEmbedder<S>::pooled(const Var<S>& features,
                                std::span<const std::size_t> lengths) const {
  if (features.rank() != 3 || features.dim(2) != config_.input_dim) {
    throw core::ShapeError("audio embedder expects [B, T, " + std::to_string(config_.input_dim) +
                           "], got " + core::shape_string(features.shape()));
  }
  if (lengths.size() != features.dim(0)) {
    throw core::ShapeError("audio embedder: need one length per batch row");
  }
  std::vector<std::size_t> steps;
  steps.reserve(lengths.size());
  for (std::size_t len : lengths) {
    if (len > features.dim(1)) throw core::ShapeError("audio embedder: length exceeds padded size");
    if (len > dsp::kMaxFrames) {
      throw std::invalid_argument("sequence of " + std::to_string(len) +
                                  " frames exceeds the 8192-frame cap");
    }
    steps.push_back(recurrent_steps(len));
  }
  Var<S> h = core::conv1d(features, conv_weight_, conv_bias_, config_.conv_stride);
  for (const auto& [f, b] : layers_) h = bigru_layer(h, steps, f, b);
  return attention_pool(h, steps, attention_);
}

template <typename S>
Var<S> AudioEmbedder<S>::forward(const Var<S>& features,
                                 std::span<const std::size_t> lengths) const {
  return core::l2_normalize(pooled(features, lengths));
}

template <typename S>
std::pair<Tensor<S>, std::vector<std::size_t>> pack_sequences(
    std::span<const dsp::MfccSequence* const> sequences) {
  if (sequences.empty()) throw std::invalid_argument("pack_sequences: empty batch");
  std::size_t longest = 0;
  const std::size_t coeffs = sequences.front()->coeffs;
  std::vector<std::size_t> lengths;
  for (const auto* s : sequences) {
    if (s->coeffs != coeffs) throw core::ShapeError("pack_sequences: coefficient count mismatch");
    if (s->frames == 0) throw std::invalid_argument("pack_sequences: empty sequence");
    longest = std::max(longest, s->frames);
    lengths.push_back(s->frames);
  }
  Tensor<S> packed({sequences.size(), longest, coeffs});
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    std::copy(sequences[b]->data.begin(), sequences[b]->data.end(),
              packed.ptr() + b * longest * coeffs);
  }
  return {std::move(packed), std::move(lengths)};
}

template <typename S>
Tensor<S> embed_audio(const dsp::MfccSequence& seq, const AudioEmbedder<S>& embedder) {
  if (!dsp::within_length_limit(seq)) {
    throw std::invalid_argument("sequence of " + std::to_string(seq.frames) +
                                " frames exceeds the 8192-frame cap");
  }
  core::NoGradGuard no_grad;
  const dsp::MfccSequence* one[] = {&seq};
  auto [packed, lengths] = pack_sequences<S>(one);
  Var<S> out = embedder.forward(Var<S>(std::move(packed)), lengths);
  return out.value().reshaped({embedder.config().latent_dim});
}

#define VGS_INSTANTIATE_AUDIO(S)                                                           \
  template Var<S> attention_pool(const Var<S>&, std::span<const std::size_t>,              \
                                 const AttentionParams<S>&);                               \
  template Var<S> bigru_layer(const Var<S>&, std::span<const std::size_t>,                 \
                              const GruParams<S>&, const GruParams<S>&);                   \
  template class AudioEmbedder<S>;                                                         \
  template std::pair<Tensor<S>, std::vector<std::size_t>> pack_sequences<S>(               \
      std::span<const dsp::MfccSequence* const>);                                          \
  template Tensor<S> embed_audio(const dsp::MfccSequence&, const AudioEmbedder<S>&);

VGS_INSTANTIATE_AUDIO(float)
VGS_INSTANTIATE_AUDIO(double)

#undef VGS_INSTANTIATE_AUDIO

}  // namespace vgs::model
