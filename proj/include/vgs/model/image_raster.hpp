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
#include <vector>

#include "vgs/core/random.hpp"
#include "vgs/core/tensor.hpp"

namespace vgs::model {

/// RGB image, channel-major (3 x H x W), values in [0, 1].
struct ImageRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels[(c * height + y) * width + x];
  }
};

/// Crop of `size` x `size` starting at (top, left), optionally mirrored.
ImageRaster crop(const ImageRaster& img, std::size_t top, std::size_t left, std::size_t size,
                 bool flip);

/// Uniform random crop offsets in [0, H - size] x [0, W - size] and a
/// horizontal flip with probability 0.5. Throws std::invalid_argument when the
/// source is smaller than `size`.
ImageRaster augment_train(const ImageRaster& img, core::Rng& rng, std::size_t size = 224);

/// Center crop at offsets ((H - size) / 2, (W - size) / 2), no flip.
ImageRaster preprocess_eval(const ImageRaster& img, std::size_t size = 224);

/// Stacks equally sized rasters into [B, 3, S, S].
template <typename S>
core::Tensor<S> stack_images(std::span<const ImageRaster> images);

}  // namespace vgs::model
