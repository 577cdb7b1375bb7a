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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vgs/core/tensor.hpp"

namespace vgs::io {

class TensorFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Versioned container: a text header (fingerprint, epoch, free-form
/// key/value lines, tensor directory) followed by raw little-endian float32
/// data. Used for checkpoints and cached MFCC sequences.
struct TensorFile {
  std::string fingerprint;
  std::int64_t epoch = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, core::Tensor<float>>> tensors;

  void set_meta(const std::string& key, const std::string& value);
  /// Throws TensorFileError when absent.
  const std::string& get_meta(const std::string& key) const;
  bool has_meta(const std::string& key) const;

  void add_tensor(const std::string& name, core::Tensor<float> t);
  const core::Tensor<float>& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

/// Writes to a temporary sibling and renames it into place, so readers never
/// see a partial file.
void save_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile load_tensor_file(const std::filesystem::path& path);
/// Header only (no tensor data is read).
TensorFile load_tensor_header(const std::filesystem::path& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fingerprint(const std::string& text);

}  // namespace vgs::io
