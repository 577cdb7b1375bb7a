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

#include "vgs/model/image_embedder.hpp"

#include <cmath>
#include <stdexcept>

namespace vgs::model {

using core::BatchNormMode;
using core::Tensor;
using core::Var;

std::size_t ImageEmbedderConfig::feature_channels() const {
  std::size_t c = stem_channels;
  for (std::size_t i = 0; i < block_config.size(); ++i) {
    c += block_config[i] * growth;
    if (i + 1 < block_config.size()) c /= 2;
  }
  return c;
}

void ImageEmbedderConfig::validate() const {
  if (growth == 0 || bottleneck_mult == 0 || stem_channels == 0 || latent_dim == 0) {
    throw std::invalid_argument("image embedder sizes must be positive");
  }
  if (block_config.empty()) throw std::invalid_argument("block configuration is empty");
  std::size_t c = stem_channels;
  for (std::size_t i = 0; i < block_config.size(); ++i) {
    if (block_config[i] == 0) throw std::invalid_argument("dense blocks need at least one layer");
    c += block_config[i] * growth;
    if (i + 1 < block_config.size()) {
      if (c % 2 != 0) {
        throw std::invalid_argument("transition after block " + std::to_string(i) +
                                    " would halve an odd channel count " + std::to_string(c));
      }
      c /= 2;
    }
  }
  // stem /4, each transition /2
  std::size_t side = input_size;
  if (side % 4 != 0) throw std::invalid_argument("input size must be divisible by 4");
  side /= 4;
  for (std::size_t i = 0; i + 1 < block_config.size(); ++i) {
    if (side < 2) throw std::invalid_argument("too many transitions for the input size");
    side /= 2;
  }
}

std::size_t dense_layer_param_count(std::size_t in_channels, std::size_t growth,
                                    std::size_t bottleneck_mult) {
  const std::size_t mid = bottleneck_mult * growth;
  return 2 * in_channels + mid * in_channels + 2 * mid + growth * mid * 9;
}

std::size_t transition_param_count(std::size_t channels) {
  return 2 * channels + channels * (channels / 2);
}

std::size_t image_backbone_param_count(const ImageEmbedderConfig& c) {
  std::size_t n = 3 * c.stem_channels * 49 + 2 * c.stem_channels;
  std::size_t ch = c.stem_channels;
  for (std::size_t i = 0; i < c.block_config.size(); ++i) {
    for (std::size_t l = 0; l < c.block_config[i]; ++l) {
      n += dense_layer_param_count(ch, c.growth, c.bottleneck_mult);
      ch += c.growth;
    }
    if (i + 1 < c.block_config.size()) {
      n += transition_param_count(ch);
      ch /= 2;
    }
  }
  return n + 2 * ch;
}

std::size_t image_param_count(const ImageEmbedderConfig& c) {
  return image_backbone_param_count(c) + c.feature_channels() * c.latent_dim + c.latent_dim;
}

template <typename S>
BatchNorm<S> BatchNorm<S>::create(core::ParamStore<S>& store, const std::string& name,
                                  std::size_t channels) {
  BatchNorm bn;
  bn.gamma = store.add(name + ".gamma", Tensor<S>({channels}, S{1}));
  bn.beta = store.add(name + ".beta", Tensor<S>({channels}));
  bn.running_mean = &store.add_buffer(name + ".running_mean", Tensor<S>({channels}));
  bn.running_var = &store.add_buffer(name + ".running_var", Tensor<S>({channels}, S{1}));
  return bn;
}

template <typename S>
Var<S> BatchNorm<S>::operator()(const Var<S>& x, BatchNormMode mode) const {
  return core::batchnorm2d(x, gamma, beta, *running_mean, *running_var, mode);
}

template <typename S>
DenseLayer<S> DenseLayer<S>::create(core::ParamStore<S>& store, const std::string& name,
                                    std::size_t in_channels, std::size_t growth,
                                    std::size_t mult) {
  const std::size_t mid = mult * growth;
  DenseLayer layer;
  layer.norm1 = BatchNorm<S>::create(store, name + ".norm1", in_channels);
  layer.conv1 = store.add(name + ".conv1", Tensor<S>({mid, in_channels, 1, 1}));
  layer.norm2 = BatchNorm<S>::create(store, name + ".norm2", mid);
  layer.conv2 = store.add(name + ".conv2", Tensor<S>({growth, mid, 3, 3}));
  return layer;
}

template <typename S>
Var<S> DenseLayer<S>::operator()(const Var<S>& x, BatchNormMode mode) const {
  Var<S> h = core::conv2d(core::relu(norm1(x, mode)), conv1, 1, 0);
  return core::conv2d(core::relu(norm2(h, mode)), conv2, 1, 1);
}

template <typename S>
Transition<S> Transition<S>::create(core::ParamStore<S>& store, const std::string& name,
                                    std::size_t channels) {
  if (channels % 2 != 0) {
    throw std::invalid_argument("transition needs an even channel count, got " +
                                std::to_string(channels));
  }
  Transition t;
  t.norm = BatchNorm<S>::create(store, name + ".norm", channels);
  t.conv = store.add(name + ".conv", Tensor<S>({channels / 2, channels, 1, 1}));
  return t;
}

template <typename S>
Var<S> Transition<S>::operator()(const Var<S>& x, BatchNormMode mode) const {
  return core::avg_pool2d(core::conv2d(core::relu(norm(x, mode)), conv, 1, 0), 2, 2);
}

template <typename S>
ImageEmbedder<S>::ImageEmbedder(const ImageEmbedderConfig& config, core::ParamStore<S>& store,
                                const std::string& prefix)
    : config_(config) {
  config_.validate();
  stem_conv_ = store.add(prefix + "stem.conv", Tensor<S>({config_.stem_channels, 3, 7, 7}));
  stem_norm_ = BatchNorm<S>::create(store, prefix + "stem.norm", config_.stem_channels);
  std::size_t ch = config_.stem_channels;
  for (std::size_t i = 0; i < config_.block_config.size(); ++i) {
    std::vector<DenseLayer<S>> block;
    for (std::size_t l = 0; l < config_.block_config[i]; ++l) {
      block.push_back(DenseLayer<S>::create(
          store, prefix + "block" + std::to_string(i) + ".layer" + std::to_string(l), ch,
          config_.growth, config_.bottleneck_mult));
      ch += config_.growth;
    }
    blocks_.push_back(std::move(block));
    if (i + 1 < config_.block_config.size()) {
      transitions_.push_back(
          Transition<S>::create(store, prefix + "transition" + std::to_string(i), ch));
      ch /= 2;
    }
  }
  final_norm_ = BatchNorm<S>::create(store, prefix + "final.norm", ch);
  head_weight_ = store.add(prefix + "head.weight", Tensor<S>({config_.latent_dim, ch}));
  head_bias_ = store.add(prefix + "head.bias", Tensor<S>({config_.latent_dim}));
}

template <typename S>
void ImageEmbedder<S>::initialize(core::Rng& rng) {
  auto kaiming = [&](Var<S>& w) {
    const auto& s = w.shape();
    const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
    core::fill_normal(w.mutable_value(), rng, 0.0, std::sqrt(2.0 / fan_in));
  };
  kaiming(stem_conv_);
  for (auto& block : blocks_) {
    for (auto& layer : block) {
      kaiming(layer.conv1);
      kaiming(layer.conv2);
    }
  }
  for (auto& t : transitions_) kaiming(t.conv);
  const double bound = 1.0 / std::sqrt(static_cast<double>(head_weight_.dim(1)));
  core::fill_uniform(head_weight_.mutable_value(), rng, -bound, bound);
  head_bias_.mutable_value().fill(S{0});
}

template <typename S>
Var<S> ImageEmbedder<S>::features(const Var<S>& images, BatchNormMode mode) const {
  const std::size_t side = config_.input_size;
  if (images.rank() != 4 || images.dim(1) != 3 || images.dim(2) != side || images.dim(3) != side) {
    throw core::ShapeError("image embedder expects [B, 3, " + std::to_string(side) + ", " +
                           std::to_string(side) + "], got " +
                           core::shape_string(images.shape()));
  }
  Var<S> x = core::conv2d(images, stem_conv_, 2, 3);
  x = core::max_pool2d(core::relu(stem_norm_(x, mode)), 3, 2, 1);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    for (const auto& layer : blocks_[i]) x = core::concat<S>({x, layer(x, mode)}, 1);
    if (i < transitions_.size()) x = transitions_[i](x, mode);
  }
  return core::global_avg_pool(core::relu(final_norm_(x, mode)));
}

template <typename S>
Var<S> ImageEmbedder<S>::forward(const Var<S>& images, BatchNormMode mode) const {
  return core::l2_normalize(core::linear(features(images, mode), head_weight_, head_bias_));
}

template struct BatchNorm<float>;
template struct BatchNorm<double>;
template struct DenseLayer<float>;
template struct DenseLayer<double>;
template struct Transition<float>;
template struct Transition<double>;
template class ImageEmbedder<float>;
template class ImageEmbedder<double>;

}  // namespace vgs::model
