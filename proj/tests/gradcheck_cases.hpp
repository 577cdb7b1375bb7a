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

// Finite-difference gradient cases for every differentiable primitive. Each
// case registers its inputs and weights as parameters so the check covers
// gradients with respect to both, then reduces the output to a scalar with a
// fixed random projection.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vgs/core/grad_check.hpp"
#include "vgs/core/ops.hpp"
#include "vgs/core/random.hpp"
#include "vgs/model/alignment.hpp"
#include "vgs/model/audio_embedder.hpp"
#include "vgs/model/image_embedder.hpp"

namespace gradcases {

using vgs::core::GradCheckResult;
using vgs::core::ParamStore;
using vgs::core::Rng;
using vgs::core::Shape;
using vgs::core::Tensor;
using vgs::core::Var;
namespace ops = vgs::core;

inline Tensor<double> rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  vgs::core::fill_uniform(t, rng, lo, hi);
  return t;
}

inline Var<double> project(const Var<double>& y, Rng& rng) {
  Var<double> r(rand_tensor(y.shape(), rng));
  return ops::sum(ops::mul(y, r));
}

struct Case {
  std::string name;
  // Builds the parameters and returns the scalar objective.
  std::function<std::function<Var<double>()>(ParamStore<double>&, Rng&)> build;
};

inline GradCheckResult run(const Case& c, std::uint64_t seed,
                           const vgs::core::GradCheckOptions& options = {}) {
  ParamStore<double> store;
  Rng rng(seed);
  auto f = c.build(store, rng);
  return vgs::core::grad_check(f, store, seed, options);
}

inline std::vector<Case> primitive_cases() {
  std::vector<Case> cases;
  cases.push_back({"linear", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 3, 4}, rng));
                     auto w = s.add("w", rand_tensor({5, 4}, rng));
                     auto b = s.add("b", rand_tensor({5}, rng));
                     Var<double> r(rand_tensor({2, 3, 5}, rng));
                     return [=] { return ops::sum(ops::mul(ops::linear(x, w, b), r)); };
                   }});
  cases.push_back({"matmul_nt", [](ParamStore<double>& s, Rng& rng) {
                     auto a = s.add("a", rand_tensor({3, 4}, rng));
                     auto b = s.add("b", rand_tensor({2, 4}, rng));
                     Var<double> r(rand_tensor({3, 2}, rng));
                     return [=] { return ops::sum(ops::mul(ops::matmul_nt(a, b), r)); };
                   }});
  cases.push_back({"elementwise", [](ParamStore<double>& s, Rng& rng) {
                     auto a = s.add("a", rand_tensor({6}, rng));
                     auto b = s.add("b", rand_tensor({6}, rng));
                     Var<double> r(rand_tensor({6}, rng));
                     return [=] {
                       return ops::sum(ops::mul(ops::scale(ops::add(ops::mul(a, b), a), 1.7), r));
                     };
                   }});
  cases.push_back({"conv1d", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 11, 3}, rng));
                     auto w = s.add("w", rand_tensor({4, 3, 6}, rng));
                     auto b = s.add("b", rand_tensor({4}, rng));
                     Var<double> r(rand_tensor({2, 3, 4}, rng));
                     return [=] { return ops::sum(ops::mul(ops::conv1d(x, w, b, 2), r)); };
                   }});
  cases.push_back({"conv2d", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 2, 5, 6}, rng));
                     auto w = s.add("w", rand_tensor({3, 2, 3, 3}, rng));
                     Var<double> r(rand_tensor({2, 3, 3, 3}, rng));
                     return [=] { return ops::sum(ops::mul(ops::conv2d(x, w, 2, 1), r)); };
                   }});
  cases.push_back({"conv2d_pointwise", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 3, 3, 4}, rng));
                     auto w = s.add("w", rand_tensor({2, 3, 1, 1}, rng));
                     Var<double> r(rand_tensor({2, 2, 3, 4}, rng));
                     return [=] { return ops::sum(ops::mul(ops::conv2d(x, w, 1, 0), r)); };
                   }});
  for (auto mode : {ops::BatchNormMode::kTrain, ops::BatchNormMode::kEval}) {
    cases.push_back(
        {mode == ops::BatchNormMode::kTrain ? "batchnorm2d_train" : "batchnorm2d_eval",
         [mode](ParamStore<double>& s, Rng& rng) {
           auto x = s.add("x", rand_tensor({3, 2, 2, 3}, rng));
           auto g = s.add("gamma", rand_tensor({2}, rng, 0.5, 1.5));
           auto b = s.add("beta", rand_tensor({2}, rng));
           auto& rm = s.add_buffer("mean", rand_tensor({2}, rng));
           auto& rv = s.add_buffer("var", rand_tensor({2}, rng, 0.5, 2.0));
           Var<double> r(rand_tensor({3, 2, 2, 3}, rng));
           return [=, &rm, &rv] {
             return ops::sum(ops::mul(ops::batchnorm2d(x, g, b, rm, rv, mode), r));
           };
         }});
  }
  cases.push_back({"relu", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({10}, rng));
                     Var<double> r(rand_tensor({10}, rng));
                     return [=] { return ops::sum(ops::mul(ops::relu(x), r)); };
                   }});
  cases.push_back({"tanh", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({10}, rng, -2, 2));
                     Var<double> r(rand_tensor({10}, rng));
                     return [=] { return ops::sum(ops::mul(ops::tanh_op(x), r)); };
                   }});
  cases.push_back({"sigmoid", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({10}, rng, -3, 3));
                     Var<double> r(rand_tensor({10}, rng));
                     return [=] { return ops::sum(ops::mul(ops::sigmoid(x), r)); };
                   }});
  cases.push_back({"softmax", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 4, 3}, rng, -2, 2));
                     Var<double> r(rand_tensor({2, 4, 3}, rng));
                     return [=] { return ops::sum(ops::mul(ops::softmax(x, 1), r)); };
                   }});
  cases.push_back({"masked_time_softmax", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 5, 3}, rng, -2, 2));
                     Var<double> r(rand_tensor({2, 5, 3}, rng));
                     return [=] {
                       const std::size_t lens[] = {5, 3};
                       return ops::sum(ops::mul(ops::masked_time_softmax(x, lens), r));
                     };
                   }});
  cases.push_back({"max_pool2d", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 2, 5, 5}, rng));
                     Var<double> r(rand_tensor({2, 2, 3, 3}, rng));
                     return [=] { return ops::sum(ops::mul(ops::max_pool2d(x, 3, 2, 1), r)); };
                   }});
  cases.push_back({"avg_pool2d", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 2, 4, 5}, rng));
                     Var<double> r(rand_tensor({2, 2, 2, 2}, rng));
                     return [=] { return ops::sum(ops::mul(ops::avg_pool2d(x, 2, 2), r)); };
                   }});
  cases.push_back({"global_avg_pool", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 3, 3, 2}, rng));
                     Var<double> r(rand_tensor({2, 3}, rng));
                     return [=] { return ops::sum(ops::mul(ops::global_avg_pool(x), r)); };
                   }});
  cases.push_back({"concat", [](ParamStore<double>& s, Rng& rng) {
                     auto a = s.add("a", rand_tensor({2, 2, 3}, rng));
                     auto b = s.add("b", rand_tensor({2, 1, 3}, rng));
                     Var<double> r(rand_tensor({2, 3, 3}, rng));
                     return [=] { return ops::sum(ops::mul(ops::concat<double>({a, b}, 1), r)); };
                   }});
  cases.push_back({"sum_axis", [](ParamStore<double>& s, Rng& rng) {
                     auto a = s.add("a", rand_tensor({2, 4, 3}, rng));
                     Var<double> r(rand_tensor({2, 3}, rng));
                     return [=] { return ops::sum(ops::mul(ops::sum_axis(a, 1), r)); };
                   }});
  cases.push_back({"l2_normalize", [](ParamStore<double>& s, Rng& rng) {
                     auto a = s.add("a", rand_tensor({3, 4}, rng));
                     Var<double> r(rand_tensor({3, 4}, rng));
                     return [=] { return ops::sum(ops::mul(ops::l2_normalize(a), r)); };
                   }});
  cases.push_back({"gru_direction", [](ParamStore<double>& s, Rng& rng) {
                     auto x = s.add("x", rand_tensor({2, 4, 3}, rng));
                     auto wih = s.add("w_ih", rand_tensor({6, 3}, rng));
                     auto whh = s.add("w_hh", rand_tensor({6, 2}, rng));
                     auto bih = s.add("b_ih", rand_tensor({6}, rng));
                     auto bhh = s.add("b_hh", rand_tensor({6}, rng));
                     Var<double> r1(rand_tensor({2, 4, 2}, rng));
                     Var<double> r2(rand_tensor({2, 4, 2}, rng));
                     return [=] {
                       const std::size_t lens[] = {4, 2};
                       auto f = ops::gru_direction(x, lens, wih, whh, bih, bhh, false);
                       auto b = ops::gru_direction(x, lens, wih, whh, bih, bhh, true);
                       return ops::add(ops::sum(ops::mul(f, r1)), ops::sum(ops::mul(b, r2)));
                     };
                   }});
  cases.push_back({"hinge_loss", [](ParamStore<double>& s, Rng& rng) {
                     auto a = s.add("a", rand_tensor({4, 3}, rng));
                     auto i = s.add("i", rand_tensor({4, 3}, rng));
                     return [=] {
                       return ops::hinge_loss(
                           ops::matmul_nt(ops::l2_normalize(a), ops::l2_normalize(i)), 0.2);
                     };
                   }});
  return cases;
}

inline vgs::model::AudioEmbedderConfig tiny_audio_config() {
  vgs::model::AudioEmbedderConfig c;
  c.latent_dim = 8;
  c.gru_layers = 2;
  c.input_dim = 5;
  c.conv_kernels = 4;
  return c;
}

inline vgs::model::ImageEmbedderConfig tiny_image_config() {
  vgs::model::ImageEmbedderConfig c;
  c.growth = 4;
  c.block_config = {2, 2};
  c.stem_channels = 8;
  c.latent_dim = 8;
  c.input_size = 16;
  return c;
}

// Whole-network cases. Parameter coordinates are subsampled by the caller
// through GradCheckOptions.
inline std::vector<Case> composite_cases() {
  namespace model = vgs::model;
  std::vector<Case> cases;
  cases.push_back({"audio_embedder", [](ParamStore<double>& s, Rng& rng) {
                     auto net = std::make_shared<model::AudioEmbedder<double>>(
                         tiny_audio_config(), s);
                     net->initialize(rng);
                     // T=7 frames for one row and 6 for the other.
                     auto x = s.add("x", rand_tensor({2, 7, 5}, rng));
                     Var<double> r(rand_tensor({2, 8}, rng));
                     return [=] {
                       const std::size_t lens[] = {7, 6};
                       return ops::sum(ops::mul(net->forward(x, lens), r));
                     };
                   }});
  cases.push_back({"image_embedder", [](ParamStore<double>& s, Rng& rng) {
                     auto net = std::make_shared<model::ImageEmbedder<double>>(
                         tiny_image_config(), s);
                     net->initialize(rng);
                     auto x = s.add("x", rand_tensor({2, 3, 16, 16}, rng));
                     Var<double> r(rand_tensor({2, 8}, rng));
                     return [=] {
                       return ops::sum(ops::mul(net->forward(x, ops::BatchNormMode::kTrain), r));
                     };
                   }});
  cases.push_back({"hinge_through_both_branches", [](ParamStore<double>& s, Rng& rng) {
                     auto audio = std::make_shared<model::AudioEmbedder<double>>(
                         tiny_audio_config(), s);
                     auto image = std::make_shared<model::ImageEmbedder<double>>(
                         tiny_image_config(), s);
                     audio->initialize(rng);
                     image->initialize(rng);
                     Var<double> a(rand_tensor({2, 7, 5}, rng));
                     Var<double> im(rand_tensor({2, 3, 16, 16}, rng));
                     return [=] {
                       const std::size_t lens[] = {7, 7};
                       // A large margin keeps every hinge term active.
                       return model::hinge_loss(audio->forward(a, lens),
                                                image->forward(im, ops::BatchNormMode::kTrain),
                                                model::HingeConfig{2.5});
                     };
                   }});
  return cases;
}

}  // namespace gradcases
