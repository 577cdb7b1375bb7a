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

#include "vgs/model/image_raster.hpp"

namespace vgs::io {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Decodes a PNG or JPEG file (detected from its leading bytes) into RGB
/// values in [0, 1]. Gray and palette images are expanded, alpha is dropped.
model::ImageRaster read_image(const std::filesystem::path& path);

/// Writes 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const model::ImageRaster& image);

}  // namespace vgs::io
