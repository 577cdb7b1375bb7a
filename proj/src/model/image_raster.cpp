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

#include "vgs/model/image_raster.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace vgs::model {

namespace {

void require_size(const ImageRaster& img, std::size_t size) {
  if (img.pixels.size() != 3 * img.height * img.width) {
    throw std::invalid_argument("image raster has " + std::to_string(img.pixels.size()) +
                                " values for 3x" + std::to_string(img.height) + "x" +
                                std::to_string(img.width));
  }
  if (img.height < size || img.width < size) {
    throw std::invalid_argument("image " + std::to_string(img.height) + "x" +
                                std::to_string(img.width) + " is smaller than the " +
                                std::to_string(size) + "x" + std::to_string(size) + " crop");
  }
}

}  // namespace

ImageRaster crop(const ImageRaster& img, std::size_t top, std::size_t left, std::size_t size,
                 bool flip) {
  require_size(img, size);
  if (top + size > img.height || left + size > img.width) {
    throw std::invalid_argument("crop window leaves the image");
  }
  ImageRaster out{size, size, std::vector<float>(3 * size * size)};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const std::size_t sx = left + (flip ? size - 1 - x : x);
        out.pixels[(c * size + y) * size + x] = img.at(c, top + y, sx);
      }
  return out;
}

ImageRaster augment_train(const ImageRaster& img, core::Rng& rng, std::size_t size) {
  require_size(img, size);
  std::uniform_int_distribution<std::size_t> dy(0, img.height - size), dx(0, img.width - size);
  const std::size_t top = dy(rng);
  const std::size_t left = dx(rng);
  const bool flip = std::bernoulli_distribution(0.5)(rng);
  return crop(img, top, left, size, flip);
}

ImageRaster preprocess_eval(const ImageRaster& img, std::size_t size) {
  require_size(img, size);
  return crop(img, (img.height - size) / 2, (img.width - size) / 2, size, false);
}

template <typename S>
core::Tensor<S> stack_images(std::span<const ImageRaster> images) {
  if (images.empty()) throw std::invalid_argument("stack_images: empty batch");
  const std::size_t h = images.front().height, w = images.front().width;
  core::Tensor<S> out({images.size(), 3, h, w});
  S* dst = out.ptr();
  for (const auto& img : images) {
    if (img.height != h || img.width != w || img.pixels.size() != 3 * h * w) {
      throw core::ShapeError("stack_images: rasters differ in size");
    }
    for (float v : img.pixels) *dst++ = static_cast<S>(v);
  }
  return out;
}

template core::Tensor<float> stack_images(std::span<const ImageRaster>);
template core::Tensor<double> stack_images(std::span<const ImageRaster>);

}  // namespace vgs::model
