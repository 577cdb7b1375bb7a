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

#include <functional>
#include <memory>
#include <vector>

#include "vgs/core/tensor.hpp"

namespace vgs::core {

template <typename S>
struct Node {
  Tensor<S> value;
  Tensor<S> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `grad` of this node and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  Tensor<S>& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor<S>(value.shape());
    return grad;
  }
};

/// Handle to a node in the dynamic computation graph. Copies share the node.
template <typename S>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<S> value, bool requires_grad = false)
      : node_(std::make_shared<Node<S>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node<S>> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<S>& value() const { return node_->value; }
  Tensor<S>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t i) const { return node_->value.dim(i); }
  std::size_t rank() const { return node_->value.rank(); }
  std::size_t size() const { return node_->value.size(); }
  S item() const { return node_->value.item(); }

  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient accumulated so far; zero-filled if nothing has flowed yet.
  const Tensor<S>& grad() const { return node_->grad_buffer(); }
  void zero_grad() {
    if (node_->grad.size() == node_->value.size()) node_->grad.fill(S{0});
  }

  const std::shared_ptr<Node<S>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<S>> node_;
};

/// True while graph recording is enabled on this thread.
bool grad_enabled();

/// Disables graph recording for its lifetime (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds a result node. Records `backward` only when some input needs grads.
template <typename S>
Var<S> make_result(Tensor<S> value, std::vector<Var<S>> inputs,
                   std::function<void(Node<S>&)> backward) {
  auto node = std::make_shared<Node<S>>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var<S>(std::move(node));
}

/// Reverse-mode accumulation from a scalar root. Leaf gradients accumulate
/// across calls until cleared; interior gradients are recomputed.
template <typename S>
void backward(const Var<S>& root);

}  // namespace vgs::core
