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
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vgs/core/autograd.hpp"

namespace vgs::core {

/// Named trainable parameters plus non-trainable buffers (batch-norm running
/// statistics), both kept in insertion order.
template <typename S>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var<S> var;
  };
  struct BufferEntry {
    std::string name;
    std::unique_ptr<Tensor<S>> tensor;
  };

  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Var<S> add(std::string name, Tensor<S> init) {
    claim(name);
    Var<S> v(std::move(init), /*requires_grad=*/true);
    param_index_.emplace(name, params_.size());
    params_.push_back({std::move(name), v});
    return v;
  }

  Tensor<S>& add_buffer(std::string name, Tensor<S> init) {
    claim(name);
    buffer_index_.emplace(name, buffers_.size());
    buffers_.push_back({std::move(name), std::make_unique<Tensor<S>>(std::move(init))});
    return *buffers_.back().tensor;
  }

  bool has_param(std::string_view name) const {
    return param_index_.count(std::string(name)) > 0;
  }
  bool has_buffer(std::string_view name) const {
    return buffer_index_.count(std::string(name)) > 0;
  }
  Var<S> param(std::string_view name) const {
    return params_.at(lookup(param_index_, name)).var;
  }
  Tensor<S>& buffer(std::string_view name) {
    return *buffers_.at(lookup(buffer_index_, name)).tensor;
  }
  const Tensor<S>& buffer(std::string_view name) const {
    return *buffers_.at(lookup(buffer_index_, name)).tensor;
  }

  const std::vector<Entry>& params() const { return params_; }
  const std::vector<BufferEntry>& buffers() const { return buffers_; }

  /// Number of trainable scalars, optionally restricted to a name prefix.
  std::size_t scalar_count(std::string_view prefix = {}) const {
    std::size_t n = 0;
    for (const auto& e : params_) {
      if (std::string_view(e.name).starts_with(prefix)) n += e.var.size();
    }
    return n;
  }

  void zero_grad() {
    for (auto& e : params_) e.var.zero_grad();
  }

 private:
  void claim(const std::string& name) {
    if (param_index_.count(name) || buffer_index_.count(name)) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
  }
  static std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index,
                            std::string_view name) {
    auto it = index.find(std::string(name));
    if (it == index.end()) {
      throw std::out_of_range("unknown parameter: " + std::string(name));
    }
    return it->second;
  }

  std::vector<Entry> params_;
  std::vector<BufferEntry> buffers_;
  std::unordered_map<std::string, std::size_t> param_index_;
  std::unordered_map<std::string, std::size_t> buffer_index_;
};

}  // namespace vgs::core
