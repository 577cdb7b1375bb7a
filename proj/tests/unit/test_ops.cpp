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

#include <doctest.h>

#include <cmath>

#include "gradcheck_cases.hpp"
#include "oracles.hpp"
#include "vgs/core/ops.hpp"

using vgs::core::BatchNormMode;
using vgs::core::Rng;
using vgs::core::Shape;
using vgs::core::Tensor;
using vgs::core::Var;
namespace ops = vgs::core;

namespace {

Var<double> leaf(Shape shape, const oracle::Vec& v, bool grad = false) {
  return Var<double>(Tensor<double>(std::move(shape), v), grad);
}

oracle::Vec values(const Var<double>& v) {
  return {v.value().data().begin(), v.value().data().end()};
}

}  // namespace

TEST_CASE("linear matches closed forms and the nested-loop oracle") {
  const oracle::Vec x{0.5, -1.0, 2.0};
  auto xv = leaf({3}, x);
  auto eye = leaf({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto zero_b = leaf({3}, {0, 0, 0});
  CHECK(oracle::max_abs_diff(values(ops::linear(xv, eye, zero_b)), x) == 0.0);

  auto zero_w = leaf({2, 3}, oracle::Vec(6, 0.0));
  auto b = leaf({2}, {0.25, -4.0});
  CHECK(values(ops::linear(xv, zero_w, b)) == oracle::Vec{0.25, -4.0});

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto xr = oracle::random_vec(6, rng), wr = oracle::random_vec(24, rng),
         br = oracle::random_vec(4, rng);
    auto y = ops::linear(leaf({6}, xr), leaf({4, 6}, wr), leaf({4}, br));
    CHECK(oracle::max_abs_diff(values(y), oracle::linear(xr, wr, br, 4, 6)) <= 1e-12);
  }
  CHECK_THROWS_AS(ops::linear(leaf({4}, oracle::Vec(4)), eye, zero_b), vgs::core::ShapeError);
}

TEST_CASE("conv1d output length, identity kernel and oracle agreement") {
  CHECK(ops::conv1d_output_length(10, 6, 2) == 3);
  CHECK(ops::conv1d_output_length(100, 6, 2) == 48);
  CHECK_THROWS_WITH(ops::conv1d_output_length(5, 6, 2), "sequence shorter than kernel");

  std::mt19937_64 rng(3);
  const auto x = oracle::random_vec(5 * 3, rng);
  auto eye = leaf({3, 3, 1}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto y = ops::conv1d(leaf({1, 5, 3}, x), eye, leaf({3}, {0, 0, 0}), 1);
  CHECK(y.shape() == Shape{1, 5, 3});
  CHECK(oracle::max_abs_diff(values(y), x) == 0.0);

  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t steps = 9 + static_cast<std::size_t>(trial), cin = 3, cout = 4, k = 6;
    const std::size_t stride = 1 + static_cast<std::size_t>(trial % 3);
    auto xs = oracle::random_vec(2 * steps * cin, rng);
    auto w = oracle::random_vec(cout * cin * k, rng);
    auto b = oracle::random_vec(cout, rng);
    auto out = values(ops::conv1d(leaf({2, steps, cin}, xs), leaf({cout, cin, k}, w),
                                  leaf({cout}, b), stride));
    oracle::Vec expect;
    for (std::size_t bi = 0; bi < 2; ++bi) {
      oracle::Vec xb(xs.begin() + static_cast<long>(bi * steps * cin),
                     xs.begin() + static_cast<long>((bi + 1) * steps * cin));
      auto e = oracle::conv1d(xb, steps, cin, w, b, cout, k, stride);
      expect.insert(expect.end(), e.begin(), e.end());
    }
    CHECK(oracle::max_abs_diff(out, expect) <= 1e-12);
  }
  CHECK_THROWS_WITH(ops::conv1d(leaf({1, 4, 3}, oracle::Vec(12)), leaf({2, 3, 6}, oracle::Vec(36)),
                                leaf({2}, {0, 0}), 1),
                    "sequence shorter than kernel");
}

TEST_CASE("conv2d geometry, pointwise identity and oracle agreement") {
  auto img = Var<double>(Tensor<double>({1, 3, 224, 224}));
  auto stem = Var<double>(Tensor<double>({2, 3, 7, 7}));
  CHECK(ops::conv2d(img, stem, 2, 3).shape() == Shape{1, 2, 112, 112});

  std::mt19937_64 rng(11);
  const auto x = oracle::random_vec(2 * 4 * 5, rng);
  auto eye = leaf({2, 2, 1, 1}, {1, 0, 0, 1});
  CHECK(oracle::max_abs_diff(values(ops::conv2d(leaf({1, 2, 4, 5}, x), eye, 1, 0)), x) == 0.0);

  struct Geo { std::size_t cin, h, w, cout, k, stride, pad; };
  for (const Geo& g : {Geo{2, 6, 7, 3, 3, 1, 1}, Geo{3, 9, 9, 2, 7, 2, 3},
                       Geo{4, 5, 5, 5, 1, 1, 0}, Geo{1, 8, 6, 2, 3, 2, 0}}) {
    auto xs = oracle::random_vec(2 * g.cin * g.h * g.w, rng);
    auto w = oracle::random_vec(g.cout * g.cin * g.k * g.k, rng);
    auto out = values(ops::conv2d(leaf({2, g.cin, g.h, g.w}, xs),
                                  leaf({g.cout, g.cin, g.k, g.k}, w), g.stride, g.pad));
    oracle::Vec expect;
    const std::size_t plane = g.cin * g.h * g.w;
    for (std::size_t b = 0; b < 2; ++b) {
      oracle::Vec xb(xs.begin() + static_cast<long>(b * plane),
                     xs.begin() + static_cast<long>((b + 1) * plane));
      auto e = oracle::conv2d(xb, g.cin, g.h, g.w, w, g.cout, g.k, g.stride, g.pad);
      expect.insert(expect.end(), e.begin(), e.end());
    }
    CHECK(oracle::max_abs_diff(out, expect) <= 1e-12);
  }
  CHECK_THROWS_AS(ops::conv2d(leaf({1, 2, 4, 4}, oracle::Vec(32)), stem, 1, 0),
                  vgs::core::ShapeError);
}

TEST_CASE("batchnorm2d train/eval semantics") {
  std::mt19937_64 rng(5);
  const std::size_t batch = 3, ch = 2, plane = 4;
  auto gamma1 = leaf({2}, {1, 1});
  auto beta0 = leaf({2}, {0, 0});

  // Standardized so that biased variance + eps == 1 exactly.
  oracle::Vec x = oracle::random_vec(batch * ch * plane, rng);
  for (std::size_t c = 0; c < ch; ++c) {
    double mean = 0, var = 0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < plane; ++i) mean += x[(b * ch + c) * plane + i];
    mean /= batch * plane;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < plane; ++i) {
        double d = x[(b * ch + c) * plane + i] - mean;
        var += d * d;
      }
    var /= batch * plane;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < plane; ++i) {
        auto& v = x[(b * ch + c) * plane + i];
        v = (v - mean) / std::sqrt(var) * std::sqrt(1.0 - 1e-5);
      }
  }
  Tensor<double> rm({2}), rv({2}, 1.0);
  auto y = ops::batchnorm2d(leaf({batch, ch, 2, 2}, x), gamma1, beta0, rm, rv,
                            BatchNormMode::kTrain);
  CHECK(oracle::max_abs_diff(values(y), x) <= 1e-6);

  // Constant channel -> beta.
  Tensor<double> rm2({2}), rv2({2}, 1.0);
  auto beta = leaf({2}, {0.3, -0.7});
  auto yc = ops::batchnorm2d(leaf({2, 2, 1, 2}, oracle::Vec(8, 4.0)), leaf({2}, {2, 3}), beta,
                             rm2, rv2, BatchNormMode::kTrain);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(yc.value()[i] == doctest::Approx((i / 2) % 2 == 0 ? 0.3 : -0.7).epsilon(1e-12));
  }
  // running stats: mean 4 after one step with momentum 0.1, var 0
  CHECK(rm2[0] == doctest::Approx(0.4));
  CHECK(rv2[0] == doctest::Approx(0.9));

  for (int trial = 0; trial < 3; ++trial) {
    auto xr = oracle::random_vec(batch * ch * plane, rng, -3, 3);
    auto g = oracle::random_vec(ch, rng), b = oracle::random_vec(ch, rng);
    Tensor<double> m({2}), v({2}, 1.0);
    auto out = ops::batchnorm2d(leaf({batch, ch, 2, 2}, xr), leaf({2}, g), leaf({2}, b), m, v,
                                BatchNormMode::kTrain);
    CHECK(oracle::max_abs_diff(values(out), oracle::batchnorm_train(xr, batch, ch, plane, g, b)) <=
          1e-12);
  }

  // Eval with untouched stats normalizes by mean 0, var 1.
  Tensor<double> m0({2}), v1({2}, 1.0);
  auto xe = oracle::random_vec(8, rng);
  auto ye = ops::batchnorm2d(leaf({1, 2, 2, 2}, xe), gamma1, beta0, m0, v1, BatchNormMode::kEval);
  for (std::size_t i = 0; i < 8; ++i) CHECK(ye.value()[i] == doctest::Approx(xe[i] / std::sqrt(1 + 1e-5)));
  CHECK(m0[0] == 0.0);

  Tensor<double> m1({1}), v2({1}, 1.0);
  CHECK_THROWS(ops::batchnorm2d(leaf({1, 1, 1, 1}, {1.0}), leaf({1}, {1}), leaf({1}, {0}), m1, v2,
                                BatchNormMode::kTrain));
}

TEST_CASE("softmax closed forms and invariants") {
  auto c = ops::softmax(leaf({4}, {2, 2, 2, 2}), 0);
  for (double v : values(c)) CHECK(v == doctest::Approx(0.25));
  auto s = ops::softmax(leaf({2}, {0.0, std::log(3.0)}), 0);
  CHECK(s.value()[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s.value()[1] == doctest::Approx(0.75).epsilon(1e-14));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = oracle::random_vec(2 * 5 * 3, rng, -10, 10);
    auto y = values(ops::softmax(leaf({2, 5, 3}, x), 1));
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t f = 0; f < 3; ++f) {
        double total = 0;
        for (std::size_t t = 0; t < 5; ++t) total += y[(b * 5 + t) * 3 + f];
        CHECK(std::abs(total - 1.0) <= 1e-6);
      }
    auto shifted = x;
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t f = 0; f < 3; ++f) shifted[(b * 5 + t) * 3 + f] += 3.5 * (f + 1) - b;
    CHECK(oracle::max_abs_diff(values(ops::softmax(leaf({2, 5, 3}, shifted), 1)), y) <= 1e-12);
  }

  // Large inputs do not overflow.
  auto big = values(ops::softmax(leaf({2}, {1000.0, 1000.0}), 0));
  CHECK(big[0] == doctest::Approx(0.5));

  const std::size_t lens[] = {2};
  auto m = values(ops::masked_time_softmax(leaf({1, 3, 1}, {0.0, 0.0, 50.0}), lens));
  CHECK(m == oracle::Vec{0.5, 0.5, 0.0});
}

TEST_CASE("activations") {
  auto r = values(ops::relu(leaf({3}, {-0.5, -2.0, -1e-3})));
  CHECK(r == oracle::Vec{0, 0, 0});
  auto t = values(ops::tanh_op(leaf({1}, {0.5})));
  CHECK(t[0] == doctest::Approx(std::tanh(0.5)));
  auto s = values(ops::sigmoid(leaf({1}, {0.0})));
  CHECK(s[0] == 0.5);
}

TEST_CASE("pooling") {
  auto c = values(ops::global_avg_pool(leaf({1, 2, 3, 3}, oracle::Vec(18, 1.25))));
  CHECK(c == oracle::Vec{1.25, 1.25});
  auto m = values(ops::max_pool2d(leaf({1, 1, 2, 2}, {1, 2, 3, 4}), 2, 2, 0));
  CHECK(m == oracle::Vec{4});

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t h = 5 + trial, w = 6;
    auto x = oracle::random_vec(h * w, rng);
    auto y = values(ops::max_pool2d(leaf({1, 1, h, w}, x), 3, 2, 1));
    const std::size_t oh = (h + 2 - 3) / 2 + 1, ow = (w + 2 - 3) / 2 + 1;
    REQUIRE(y.size() == oh * ow);
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double best = -INFINITY;
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx) {
            long iy = static_cast<long>(oy * 2) + dy, ix = static_cast<long>(ox * 2) + dx;
            if (iy >= 0 && ix >= 0 && iy < static_cast<long>(h) && ix < static_cast<long>(w))
              best = std::max(best, x[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)]);
          }
        CHECK(y[oy * ow + ox] == best);
      }
    auto a = values(ops::avg_pool2d(leaf({1, 1, h, w}, x), 2, 2));
    for (std::size_t oy = 0; oy < h / 2; ++oy)
      for (std::size_t ox = 0; ox < w / 2; ++ox) {
        double e = (x[2 * oy * w + 2 * ox] + x[2 * oy * w + 2 * ox + 1] +
                    x[(2 * oy + 1) * w + 2 * ox] + x[(2 * oy + 1) * w + 2 * ox + 1]) / 4;
        CHECK(std::abs(a[oy * (w / 2) + ox] - e) <= 1e-15);
      }
  }
}

TEST_CASE("l2_normalize") {
  auto y = values(ops::l2_normalize(leaf({2}, {3, 4})));
  CHECK(y[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(values(ops::l2_normalize(leaf({3}, {0, 1, 0}))) == oracle::Vec{0, 1, 0});
  CHECK_THROWS_WITH(ops::l2_normalize(leaf({3}, {0, 0, 0})), "degenerate norm");
}

TEST_CASE("gru_direction") {
  std::mt19937_64 rng(21);
  const std::size_t d = 2, h = 2;
  // zero parameters keep the state at zero
  {
    auto x = leaf({1, 4, d}, oracle::random_vec(4 * d, rng, -5, 5));
    auto wih = leaf({3 * h, d}, oracle::Vec(3 * h * d)), whh = leaf({3 * h, h}, oracle::Vec(3 * h * h));
    auto b = leaf({3 * h}, oracle::Vec(3 * h));
    const std::size_t lens[] = {4};
    for (bool rev : {false, true})
      for (double v : values(ops::gru_direction(x, lens, wih, whh, b, b, rev))) CHECK(v == 0.0);
  }
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t steps = 3;
    auto x = oracle::random_vec(steps * d, rng);
    auto wih = oracle::random_vec(3 * h * d, rng), whh = oracle::random_vec(3 * h * h, rng);
    auto bih = oracle::random_vec(3 * h, rng), bhh = oracle::random_vec(3 * h, rng);
    const std::size_t lens[] = {steps};
    for (bool rev : {false, true}) {
      auto y = ops::gru_direction(leaf({1, steps, d}, x), lens, leaf({3 * h, d}, wih),
                                  leaf({3 * h, h}, whh), leaf({3 * h}, bih), leaf({3 * h}, bhh), rev);
      CHECK(oracle::max_abs_diff(values(y),
                                 oracle::gru(x, steps, d, h, wih, whh, bih, bhh, rev)) <= 1e-12);
    }
    // time reversal swaps directions
    oracle::Vec xr(x.size());
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t c = 0; c < d; ++c) xr[t * d + c] = x[(steps - 1 - t) * d + c];
    auto fwd_rev = oracle::gru(xr, steps, d, h, wih, whh, bih, bhh, false);
    auto bwd = values(ops::gru_direction(leaf({1, steps, d}, x), lens, leaf({3 * h, d}, wih),
                                         leaf({3 * h, h}, whh), leaf({3 * h}, bih),
                                         leaf({3 * h}, bhh), true));
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t j = 0; j < h; ++j)
        CHECK(std::abs(bwd[t * h + j] - fwd_rev[(steps - 1 - t) * h + j]) <= 1e-12);

    // A padded batch row produces the same valid outputs as the unpadded one.
    auto padded = x;
    padded.resize((steps + 2) * d, 9.0);
    const std::size_t plen[] = {steps};
    for (bool rev : {false, true}) {
      auto yp = values(ops::gru_direction(leaf({1, steps + 2, d}, padded), plen,
                                          leaf({3 * h, d}, wih), leaf({3 * h, h}, whh),
                                          leaf({3 * h}, bih), leaf({3 * h}, bhh), rev));
      auto ye = oracle::gru(x, steps, d, h, wih, whh, bih, bhh, rev);
      for (std::size_t i = 0; i < ye.size(); ++i) CHECK(std::abs(yp[i] - ye[i]) <= 1e-12);
      for (std::size_t i = ye.size(); i < yp.size(); ++i) CHECK(yp[i] == 0.0);
    }
  }
  const std::size_t bad[] = {0};
  CHECK_THROWS(ops::gru_direction(leaf({1, 2, d}, oracle::Vec(4)), bad, leaf({6, 2}, oracle::Vec(12)),
                                  leaf({6, 2}, oracle::Vec(12)), leaf({6}, oracle::Vec(6)),
                                  leaf({6}, oracle::Vec(6)), false));
}

TEST_CASE("backward contract") {
  auto x = leaf({3}, {1.0, -2.0, 0.5}, true);
  auto y = ops::sum(ops::mul(x, x));
  ops::backward(y);
  CHECK(values(Var<double>(Tensor<double>(x.grad()))) == oracle::Vec{2.0, -4.0, 1.0});
  // additive accumulation
  ops::backward(y);
  CHECK(x.grad()[1] == -8.0);
  x.zero_grad();
  CHECK(x.grad()[1] == 0.0);

  auto neg = leaf({3}, {-1.0, -0.1, -3.0}, true);
  ops::backward(ops::sum(ops::relu(neg)));
  for (double g : neg.grad().data()) CHECK(g == 0.0);

  CHECK_THROWS_AS(ops::backward(ops::mul(x, x)), vgs::core::ShapeError);

  {
    vgs::core::NoGradGuard guard;
    auto z = ops::mul(x, x);
    CHECK_FALSE(z.requires_grad());
  }
}

TEST_CASE("primitive gradients agree with central differences") {
  for (const auto& c : gradcases::primitive_cases()) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto r = gradcases::run(c, seed);
      INFO(c.name << " seed " << seed << " worst " << r.worst_param << "[" << r.worst_index << "]");
      CHECK(r.max_rel_error <= 1e-5);
      if (c.name == "linear") CHECK(r.max_rel_error <= 1e-7);
    }
  }
}

TEST_CASE("float precision path runs the same primitives") {
  Var<float> x(Tensor<float>({1, 7, 2}, 0.5f));
  Var<float> w(Tensor<float>({3, 2, 6}, 0.1f), true);
  Var<float> b(Tensor<float>({3}, 0.0f), true);
  auto y = ops::sum(ops::conv1d(x, w, b, 1));
  ops::backward(y);
  CHECK(y.item() == doctest::Approx(2 * 3 * 12 * 0.05f));
  CHECK(w.grad()[0] == doctest::Approx(1.0f));
}

TEST_CASE("grad_check refines kinks but still flags wrong gradients") {
  using vgs::core::make_result;
  using vgs::core::Node;
  vgs::core::ParamStore<double> store;
  auto x = store.add("x", Tensor<double>({2}, {3e-6, -0.5}));
  auto relu_sum = [&] { return ops::sum(ops::relu(x)); };

  vgs::core::GradCheckOptions plain;
  plain.kink_refinements = 0;
  CHECK(vgs::core::grad_check(relu_sum, store, 1, plain).max_rel_error > 0.1);
  const auto refined = vgs::core::grad_check(relu_sum, store, 1);
  CHECK(refined.max_rel_error <= 1e-8);
  CHECK(refined.refined_coords == 1);

  // doubles the incoming gradient, so the reported derivative is wrong by 2x
  auto broken = [&] {
    Tensor<double> v = x.value();
    return ops::sum(make_result<double>(std::move(v), {x}, [](Node<double>& self) {
      auto& g = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * self.grad[i];
    }));
  };
  CHECK(vgs::core::grad_check(broken, store, 1).max_rel_error >= 0.9);
}
