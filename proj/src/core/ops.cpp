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

#include "vgs/core/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace vgs::core {
namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;

template <typename S>
MatMap<S> as_mat(Tensor<S>& t, std::size_t rows, std::size_t cols) {
  return MatMap<S>(t.ptr(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}
template <typename S>
ConstMatMap<S> as_mat(const Tensor<S>& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap<S>(t.ptr(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

// Gradient buffer of input i, or nullptr when that input is not tracked.
template <typename S>
Tensor<S>* input_grad(Node<S>& self, std::size_t i) {
  auto& in = *self.inputs[i];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  require(s.size() == rank, std::string(op) + ": expected rank " +
                                std::to_string(rank) + ", got " +
                                shape_string(s));
}

template <typename S>
void require_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  require(axis < s.size(), "axis " + std::to_string(axis) +
                               " out of range for " + shape_string(s));
  AxisSplit out;
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  out.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) out.inner *= s[i];
  return out;
}

template <typename S, typename F, typename D>
Var<S> unary(const Var<S>& x, F f, D dfdy_from_xy) {
  Tensor<S> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  Tensor<S> saved = out;
  return make_result<S>(
      std::move(out), {x},
      [saved = std::move(saved), dfdy_from_xy](Node<S>& self) {
        Tensor<S>* gx = input_grad(self, 0);
        if (!gx) return;
        const auto& xv = self.inputs[0]->value;
        for (std::size_t i = 0; i < saved.size(); ++i) {
          (*gx)[i] += self.grad[i] * dfdy_from_xy(xv[i], saved[i]);
        }
      });
}

}  // namespace

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a, b, "add");
  Tensor<S> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_result<S>(std::move(out), {a, b}, [](Node<S>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor<S>* g = input_grad(self, k)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  require_same_shape(a, b, "mul");
  Tensor<S> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_result<S>(std::move(out), {a, b}, [](Node<S>& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    if (Tensor<S>* ga = input_grad(self, 0)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i] * bv[i];
    }
    if (Tensor<S>* gb = input_grad(self, 1)) {
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += self.grad[i] * av[i];
    }
  });
}

template <typename S>
Var<S> scale(const Var<S>& a, S factor) {
  Tensor<S> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return make_result<S>(std::move(out), {a}, [factor](Node<S>& self) {
    if (Tensor<S>* g = input_grad(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * factor;
    }
  });
}

template <typename S>
Var<S> sum(const Var<S>& a) {
  S total = 0;
  for (S v : a.value().data()) total += v;
  return make_result<S>(Tensor<S>::scalar(total), {a}, [](Node<S>& self) {
    if (Tensor<S>* g = input_grad(self, 0)) {
      const S seed = self.grad[0];
      for (auto& v : g->data()) v += seed;
    }
  });
}

template <typename S>
Var<S> sum_axis(const Var<S>& a, std::size_t axis) {
  const AxisSplit sp = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<S> out(out_shape);
  const auto& av = a.value();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t j = 0; j < sp.extent; ++j)
      for (std::size_t i = 0; i < sp.inner; ++i)
        out[o * sp.inner + i] += av[(o * sp.extent + j) * sp.inner + i];
  return make_result<S>(std::move(out), {a}, [sp](Node<S>& self) {
    Tensor<S>* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t j = 0; j < sp.extent; ++j)
        for (std::size_t i = 0; i < sp.inner; ++i)
          (*g)[(o * sp.extent + j) * sp.inner + i] += self.grad[o * sp.inner + i];
  });
}

template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias) {
  require_rank(weight.shape(), 2, "linear weight");
  require(x.rank() >= 1, "linear: input must have rank >= 1");
  const std::size_t n = weight.dim(1);
  const std::size_t m = weight.dim(0);
  require(x.shape().back() == n, "linear: input width " +
                                     std::to_string(x.shape().back()) +
                                     " does not match weight " +
                                     shape_string(weight.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) {
    require(bias.shape() == Shape{m}, "linear: bias shape " +
                                          shape_string(bias.shape()));
  }
  const std::size_t rows = x.size() / n;
  Shape out_shape = x.shape();
  out_shape.back() = m;
  Tensor<S> out(out_shape);
  auto y = as_mat(out, rows, m);
  y.noalias() = as_mat(x.value(), rows, n) * as_mat(weight.value(), m, n).transpose();
  if (has_bias) y.rowwise() += as_mat(bias.value(), 1, m).row(0);

  std::vector<Var<S>> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<S>(
      std::move(out), std::move(inputs),
      [rows, n, m, has_bias](Node<S>& self) {
        auto g = as_mat(std::as_const(self.grad), rows, m);
        if (Tensor<S>* gx = input_grad(self, 0)) {
          as_mat(*gx, rows, n).noalias() +=
              g * as_mat(std::as_const(self.inputs[1]->value), m, n);
        }
        if (Tensor<S>* gw = input_grad(self, 1)) {
          as_mat(*gw, m, n).noalias() +=
              g.transpose() * as_mat(std::as_const(self.inputs[0]->value), rows, n);
        }
        if (has_bias) {
          if (Tensor<S>* gb = input_grad(self, 2)) {
            as_mat(*gb, 1, m) += g.colwise().sum();
          }
        }
      });
}

template <typename S>
Var<S> matmul_nt(const Var<S>& a, const Var<S>& b) {
  require_rank(a.shape(), 2, "matmul_nt lhs");
  require_rank(b.shape(), 2, "matmul_nt rhs");
  require(a.dim(1) == b.dim(1), "matmul_nt: inner dimension mismatch " +
                                    shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
  const std::size_t p = a.dim(0), q = b.dim(0), n = a.dim(1);
  Tensor<S> out({p, q});
  as_mat(out, p, q).noalias() =
      as_mat(a.value(), p, n) * as_mat(b.value(), q, n).transpose();
  return make_result<S>(std::move(out), {a, b}, [p, q, n](Node<S>& self) {
    auto g = as_mat(std::as_const(self.grad), p, q);
    if (Tensor<S>* ga = input_grad(self, 0)) {
      as_mat(*ga, p, n).noalias() +=
          g * as_mat(std::as_const(self.inputs[1]->value), q, n);
    }
    if (Tensor<S>* gb = input_grad(self, 1)) {
      as_mat(*gb, q, n).noalias() +=
          g.transpose() * as_mat(std::as_const(self.inputs[0]->value), p, n);
    }
  });
}

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel,
                                 std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("conv1d: stride must be >= 1");
  if (length < kernel) throw std::invalid_argument("sequence shorter than kernel");
  return (length - kernel) / stride + 1;
}

template <typename S>
Var<S> conv1d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias,
              std::size_t stride) {
  require_rank(x.shape(), 3, "conv1d input");
  require_rank(weight.shape(), 3, "conv1d weight");
  const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  require(weight.dim(1) == cin, "conv1d: weight expects " +
                                    std::to_string(weight.dim(1)) +
                                    " input channels, got " + std::to_string(cin));
  require(bias.shape() == Shape{cout}, "conv1d: bias shape " +
                                           shape_string(bias.shape()));
  const std::size_t out_steps = conv1d_output_length(steps, k, stride);
  const std::size_t patch = cin * k;

  // Patch row t holds x[t*stride + j][c] at column c*k + j, matching the
  // [Cout, Cin, k] weight layout.
  auto build_patches = [=](const Tensor<S>& xv, std::size_t b, RowMat<S>& p) {
    p.resize(static_cast<Eigen::Index>(out_steps), static_cast<Eigen::Index>(patch));
    const S* base = xv.ptr() + b * steps * cin;
    for (std::size_t t = 0; t < out_steps; ++t)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < cin; ++c)
          p(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c * k + j)) =
              base[(t * stride + j) * cin + c];
  };

  Tensor<S> out({batch, out_steps, cout});
  RowMat<S> patches;
  const auto w = as_mat(weight.value(), cout, patch);
  const auto bvec = as_mat(bias.value(), 1, cout);
  for (std::size_t b = 0; b < batch; ++b) {
    build_patches(x.value(), b, patches);
    MatMap<S> y(out.ptr() + b * out_steps * cout,
                static_cast<Eigen::Index>(out_steps), static_cast<Eigen::Index>(cout));
    y.noalias() = patches * w.transpose();
    y.rowwise() += bvec.row(0);
  }

  return make_result<S>(
      std::move(out), {x, weight, bias},
      [=](Node<S>& self) {
        Tensor<S>* gx = input_grad(self, 0);
        Tensor<S>* gw = input_grad(self, 1);
        Tensor<S>* gb = input_grad(self, 2);
        const auto& xv = self.inputs[0]->value;
        const auto wm = as_mat(std::as_const(self.inputs[1]->value), cout, patch);
        RowMat<S> p, dp;
        for (std::size_t b = 0; b < batch; ++b) {
          ConstMatMap<S> g(self.grad.ptr() + b * out_steps * cout,
                           static_cast<Eigen::Index>(out_steps),
                           static_cast<Eigen::Index>(cout));
          if (gb) as_mat(*gb, 1, cout) += g.colwise().sum();
          if (gw) {
            build_patches(xv, b, p);
            as_mat(*gw, cout, patch).noalias() += g.transpose() * p;
          }
          if (gx) {
            dp.noalias() = g * wm;
            S* base = gx->ptr() + b * steps * cin;
            for (std::size_t t = 0; t < out_steps; ++t)
              for (std::size_t j = 0; j < k; ++j)
                for (std::size_t c = 0; c < cin; ++c)
                  base[(t * stride + j) * cin + c] +=
                      dp(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c * k + j));
          }
        }
      });
}

namespace {

struct Conv2dGeometry {
  std::size_t cin, h, w, k, stride, pad, oh, ow;
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

template <typename S>
void im2col(const S* img, const Conv2dGeometry& g, RowMat<S>& col) {
  col.resize(static_cast<Eigen::Index>(g.cin * g.k * g.k),
             static_cast<Eigen::Index>(g.oh * g.ow));
  S* dst = col.data();
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const S* plane = img + c * g.h * g.w;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 &&
                                iy < static_cast<std::ptrdiff_t>(g.h) &&
                                ix < static_cast<std::ptrdiff_t>(g.w);
            *dst++ = inside ? plane[iy * static_cast<std::ptrdiff_t>(g.w) + ix] : S{0};
          }
        }
      }
}

template <typename S>
void col2im_add(const RowMat<S>& col, const Conv2dGeometry& g, S* img) {
  const S* src = col.data();
  for (std::size_t c = 0; c < g.cin; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        S* plane = img + c * g.h * g.w;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          for (std::size_t ox = 0; ox < g.ow; ++ox, ++src) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                ix < static_cast<std::ptrdiff_t>(g.w)) {
              plane[iy * static_cast<std::ptrdiff_t>(g.w) + ix] += *src;
            }
          }
        }
      }
}

}  // namespace

template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& weight, std::size_t stride,
              std::size_t padding) {
  require_rank(x.shape(), 4, "conv2d input");
  require_rank(weight.shape(), 4, "conv2d weight");
  require(stride >= 1, "conv2d: stride must be >= 1");
  const std::size_t batch = x.dim(0);
  const std::size_t cout = weight.dim(0);
  Conv2dGeometry g{x.dim(1), x.dim(2), x.dim(3), weight.dim(2), stride, padding, 0, 0};
  require(weight.dim(1) == g.cin && weight.dim(3) == g.k,
          "conv2d: weight " + shape_string(weight.shape()) +
              " incompatible with input " + shape_string(x.shape()));
  require(g.h + 2 * padding >= g.k && g.w + 2 * padding >= g.k,
          "conv2d: input " + shape_string(x.shape()) + " smaller than kernel");
  g.oh = (g.h + 2 * padding - g.k) / stride + 1;
  g.ow = (g.w + 2 * padding - g.k) / stride + 1;
  const std::size_t kdim = g.cin * g.k * g.k;
  const std::size_t in_plane = g.cin * g.h * g.w;
  const std::size_t out_plane = cout * g.oh * g.ow;
  const std::size_t npix = g.oh * g.ow;

  Tensor<S> out({batch, cout, g.oh, g.ow});
  const auto wm = as_mat(weight.value(), cout, kdim);
  RowMat<S> col;
  for (std::size_t b = 0; b < batch; ++b) {
    MatMap<S> y(out.ptr() + b * out_plane, static_cast<Eigen::Index>(cout),
                static_cast<Eigen::Index>(npix));
    if (g.pointwise()) {
      y.noalias() = wm * ConstMatMap<S>(x.value().ptr() + b * in_plane,
                                        static_cast<Eigen::Index>(kdim),
                                        static_cast<Eigen::Index>(npix));
    } else {
      im2col(x.value().ptr() + b * in_plane, g, col);
      y.noalias() = wm * col;
    }
  }

  return make_result<S>(std::move(out), {x, weight}, [=](Node<S>& self) {
    Tensor<S>* gx = input_grad(self, 0);
    Tensor<S>* gw = input_grad(self, 1);
    const auto& xv = self.inputs[0]->value;
    const auto w = as_mat(std::as_const(self.inputs[1]->value), cout, kdim);
    RowMat<S> col, dcol;
    for (std::size_t b = 0; b < batch; ++b) {
      ConstMatMap<S> gy(self.grad.ptr() + b * out_plane,
                        static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(npix));
      if (g.pointwise()) {
        ConstMatMap<S> xb(xv.ptr() + b * in_plane, static_cast<Eigen::Index>(kdim),
                          static_cast<Eigen::Index>(npix));
        if (gw) as_mat(*gw, cout, kdim).noalias() += gy * xb.transpose();
        if (gx) {
          MatMap<S>(gx->ptr() + b * in_plane, static_cast<Eigen::Index>(kdim),
                    static_cast<Eigen::Index>(npix))
              .noalias() += w.transpose() * gy;
        }
      } else {
        if (gw) {
          im2col(xv.ptr() + b * in_plane, g, col);
          as_mat(*gw, cout, kdim).noalias() += gy * col.transpose();
        }
        if (gx) {
          dcol.noalias() = w.transpose() * gy;
          col2im_add(dcol, g, gx->ptr() + b * in_plane);
        }
      }
    }
  });
}

template <typename S>
Var<S> batchnorm2d(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                   Tensor<S>& running_mean, Tensor<S>& running_var,
                   BatchNormMode mode, S eps, S momentum) {
  require_rank(x.shape(), 4, "batchnorm2d input");
  const std::size_t batch = x.dim(0), channels = x.dim(1);
  const std::size_t plane = x.dim(2) * x.dim(3);
  const Shape cshape{channels};
  require(gamma.shape() == cshape && beta.shape() == cshape &&
              running_mean.shape() == cshape && running_var.shape() == cshape,
          "batchnorm2d: parameter shapes must be [" + std::to_string(channels) + "]");
  const std::size_t count = batch * plane;
  const bool train = mode == BatchNormMode::kTrain;
  if (train && count < 2) {
    throw std::invalid_argument("batchnorm2d: train mode needs at least 2 values per channel");
  }

  const auto& xv = x.value();
  const auto& gv = gamma.value();
  const auto& bv = beta.value();
  Tensor<S> out(x.shape());
  Tensor<S> xhat(x.shape());
  std::vector<S> inv_std(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    S mean, var;
    if (train) {
      S acc = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const S* p = xv.ptr() + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      }
      mean = acc / static_cast<S>(count);
      S sq = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const S* p = xv.ptr() + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / static_cast<S>(count);
      const S unbiased = sq / static_cast<S>(count - 1);
      running_mean[c] = (S{1} - momentum) * running_mean[c] + momentum * mean;
      running_var[c] = (S{1} - momentum) * running_var[c] + momentum * unbiased;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    inv_std[c] = S{1} / std::sqrt(var + eps);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const S h = (xv[off + i] - mean) * inv_std[c];
        xhat[off + i] = h;
        out[off + i] = gv[c] * h + bv[c];
      }
    }
  }

  return make_result<S>(
      std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<S>& self) {
        Tensor<S>* gx = input_grad(self, 0);
        Tensor<S>* gg = input_grad(self, 1);
        Tensor<S>* gb = input_grad(self, 2);
        const auto& gam = self.inputs[1]->value;
        const auto& dy = self.grad;
        for (std::size_t c = 0; c < channels; ++c) {
          S sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_dy += dy[off + i];
              sum_dy_xhat += dy[off + i] * xhat[off + i];
            }
          }
          if (gg) (*gg)[c] += sum_dy_xhat;
          if (gb) (*gb)[c] += sum_dy;
          if (!gx) continue;
          const S k = gam[c] * inv_std[c];
          const S n = static_cast<S>(count);
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              if (train) {
                (*gx)[off + i] +=
                    k * (dy[off + i] - sum_dy / n - xhat[off + i] * sum_dy_xhat / n);
              } else {
                (*gx)[off + i] += k * dy[off + i];
              }
            }
          }
        }
      });
}

template <typename S>
Var<S> relu(const Var<S>& x) {
  return unary(
      x, [](S v) { return v > S{0} ? v : S{0}; },
      [](S v, S) { return v > S{0} ? S{1} : S{0}; });
}

template <typename S>
Var<S> tanh_op(const Var<S>& x) {
  return unary(
      x, [](S v) { return std::tanh(v); }, [](S, S y) { return S{1} - y * y; });
}

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  return unary(
      x, [](S v) { return S{1} / (S{1} + std::exp(-v)); },
      [](S, S y) { return y * (S{1} - y); });
}

namespace {

// Shared softmax kernel over strided lanes; `valid` limits the lane length.
template <typename S>
void softmax_lane(const S* x, S* y, std::size_t valid, std::size_t extent,
                  std::size_t stride) {
  S mx = -std::numeric_limits<S>::infinity();
  for (std::size_t j = 0; j < valid; ++j) mx = std::max(mx, x[j * stride]);
  S total = 0;
  for (std::size_t j = 0; j < valid; ++j) {
    y[j * stride] = std::exp(x[j * stride] - mx);
    total += y[j * stride];
  }
  for (std::size_t j = 0; j < valid; ++j) y[j * stride] /= total;
  for (std::size_t j = valid; j < extent; ++j) y[j * stride] = S{0};
}

template <typename S>
void softmax_lane_backward(const S* y, const S* dy, S* dx, std::size_t valid,
                           std::size_t stride) {
  S dot = 0;
  for (std::size_t j = 0; j < valid; ++j) dot += dy[j * stride] * y[j * stride];
  for (std::size_t j = 0; j < valid; ++j)
    dx[j * stride] += y[j * stride] * (dy[j * stride] - dot);
}

}  // namespace

template <typename S>
Var<S> softmax(const Var<S>& x, std::size_t axis) {
  const AxisSplit sp = split_axis(x.shape(), axis);
  Tensor<S> out(x.shape());
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const std::size_t base = o * sp.extent * sp.inner + i;
      softmax_lane(x.value().ptr() + base, out.ptr() + base, sp.extent, sp.extent,
                   sp.inner);
    }
  Tensor<S> saved = out;
  return make_result<S>(std::move(out), {x},
                        [sp, saved = std::move(saved)](Node<S>& self) {
                          Tensor<S>* gx = input_grad(self, 0);
                          if (!gx) return;
                          for (std::size_t o = 0; o < sp.outer; ++o)
                            for (std::size_t i = 0; i < sp.inner; ++i) {
                              const std::size_t base = o * sp.extent * sp.inner + i;
                              softmax_lane_backward(saved.ptr() + base,
                                                    self.grad.ptr() + base,
                                                    gx->ptr() + base, sp.extent,
                                                    sp.inner);
                            }
                        });
}

template <typename S>
Var<S> masked_time_softmax(const Var<S>& x, std::span<const std::size_t> lengths) {
  require_rank(x.shape(), 3, "masked_time_softmax input");
  const std::size_t batch = x.dim(0), steps = x.dim(1), feat = x.dim(2);
  require(lengths.size() == batch, "masked_time_softmax: need one length per batch row");
  std::vector<std::size_t> lens(lengths.begin(), lengths.end());
  for (std::size_t len : lens) {
    require(len >= 1 && len <= steps, "masked_time_softmax: length " +
                                          std::to_string(len) + " outside [1, " +
                                          std::to_string(steps) + "]");
  }
  Tensor<S> out(x.shape());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t f = 0; f < feat; ++f) {
      const std::size_t base = b * steps * feat + f;
      softmax_lane(x.value().ptr() + base, out.ptr() + base, lens[b], steps, feat);
    }
  Tensor<S> saved = out;
  return make_result<S>(
      std::move(out), {x},
      [=, saved = std::move(saved), lens = std::move(lens)](Node<S>& self) {
        Tensor<S>* gx = input_grad(self, 0);
        if (!gx) return;
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t f = 0; f < feat; ++f) {
            const std::size_t base = b * steps * feat + f;
            softmax_lane_backward(saved.ptr() + base, self.grad.ptr() + base,
                                  gx->ptr() + base, lens[b], feat);
          }
      });
}

template <typename S>
Var<S> max_pool2d(const Var<S>& x, std::size_t window, std::size_t stride,
                  std::size_t padding) {
  require_rank(x.shape(), 4, "max_pool2d input");
  require(window >= 1 && stride >= 1, "max_pool2d: window and stride must be >= 1");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h + 2 * padding >= window && w + 2 * padding >= window,
          "max_pool2d: input smaller than window");
  const std::size_t oh = (h + 2 * padding - window) / stride + 1;
  const std::size_t ow = (w + 2 * padding - window) / stride + 1;
  Tensor<S> out({x.dim(0), x.dim(1), oh, ow});
  std::vector<std::size_t> argmax(out.size());
  const auto& xv = x.value();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        S best = -std::numeric_limits<S>::infinity();
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t ky = 0; ky < window; ++ky)
          for (std::size_t kx = 0; kx < window; ++kx) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                            static_cast<std::ptrdiff_t>(padding);
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                            static_cast<std::ptrdiff_t>(padding);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                ix >= static_cast<std::ptrdiff_t>(w))
              continue;
            const std::size_t idx = p * h * w + static_cast<std::size_t>(iy) * w +
                                    static_cast<std::size_t>(ix);
            if (!found || xv[idx] > best) {
              best = xv[idx];
              best_idx = idx;
              found = true;
            }
          }
        const std::size_t o = (p * oh + oy) * ow + ox;
        out[o] = best;
        argmax[o] = best_idx;
      }
  return make_result<S>(std::move(out), {x},
                        [argmax = std::move(argmax)](Node<S>& self) {
                          Tensor<S>* gx = input_grad(self, 0);
                          if (!gx) return;
                          for (std::size_t o = 0; o < argmax.size(); ++o)
                            (*gx)[argmax[o]] += self.grad[o];
                        });
}

template <typename S>
Var<S> avg_pool2d(const Var<S>& x, std::size_t window, std::size_t stride) {
  require_rank(x.shape(), 4, "avg_pool2d input");
  require(window >= 1 && stride >= 1, "avg_pool2d: window and stride must be >= 1");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h >= window && w >= window, "avg_pool2d: input smaller than window");
  const std::size_t oh = (h - window) / stride + 1;
  const std::size_t ow = (w - window) / stride + 1;
  const S inv = S{1} / static_cast<S>(window * window);
  Tensor<S> out({x.dim(0), x.dim(1), oh, ow});
  const auto& xv = x.value();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        S acc = 0;
        for (std::size_t ky = 0; ky < window; ++ky)
          for (std::size_t kx = 0; kx < window; ++kx)
            acc += xv[p * h * w + (oy * stride + ky) * w + ox * stride + kx];
        out[(p * oh + oy) * ow + ox] = acc * inv;
      }
  return make_result<S>(std::move(out), {x}, [=](Node<S>& self) {
    Tensor<S>* gx = input_grad(self, 0);
    if (!gx) return;
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const S g = self.grad[(p * oh + oy) * ow + ox] * inv;
          for (std::size_t ky = 0; ky < window; ++ky)
            for (std::size_t kx = 0; kx < window; ++kx)
              (*gx)[p * h * w + (oy * stride + ky) * w + ox * stride + kx] += g;
        }
  });
}

template <typename S>
Var<S> global_avg_pool(const Var<S>& x) {
  require_rank(x.shape(), 4, "global_avg_pool input");
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  Tensor<S> out({x.dim(0), x.dim(1)});
  for (std::size_t p = 0; p < planes; ++p) {
    S acc = 0;
    for (std::size_t i = 0; i < area; ++i) acc += x.value()[p * area + i];
    out[p] = acc / static_cast<S>(area);
  }
  return make_result<S>(std::move(out), {x}, [planes, area](Node<S>& self) {
    Tensor<S>* gx = input_grad(self, 0);
    if (!gx) return;
    for (std::size_t p = 0; p < planes; ++p) {
      const S g = self.grad[p] / static_cast<S>(area);
      for (std::size_t i = 0; i < area; ++i) (*gx)[p * area + i] += g;
    }
  });
}

template <typename S>
Var<S> concat(const std::vector<Var<S>>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  Shape out_shape = parts.front().shape();
  const AxisSplit first = split_axis(out_shape, axis);
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const AxisSplit sp = split_axis(p.shape(), axis);
    require(p.rank() == out_shape.size() && sp.outer == first.outer &&
                sp.inner == first.inner,
            "concat: incompatible shapes " + shape_string(out_shape) + " and " +
                shape_string(p.shape()));
    extents.push_back(sp.extent);
    total += sp.extent;
  }
  out_shape[axis] = total;
  Tensor<S> out(out_shape);
  const std::size_t outer = first.outer, inner = first.inner;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    const std::size_t run = extents[k] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.ptr() + o * run, run, out.ptr() + (o * total + offset) * inner);
    }
    offset += extents[k];
  }
  return make_result<S>(
      std::move(out), parts,
      [outer, inner, total, extents = std::move(extents)](Node<S>& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < extents.size(); ++k) {
          const std::size_t run = extents[k] * inner;
          if (Tensor<S>* g = input_grad(self, k)) {
            for (std::size_t o = 0; o < outer; ++o) {
              const S* src = self.grad.ptr() + (o * total + offset) * inner;
              S* dst = g->ptr() + o * run;
              for (std::size_t i = 0; i < run; ++i) dst[i] += src[i];
            }
          }
          offset += extents[k];
        }
      });
}

template <typename S>
Var<S> l2_normalize(const Var<S>& x) {
  require(x.rank() >= 1, "l2_normalize: input must have rank >= 1");
  const std::size_t n = x.shape().back();
  const std::size_t rows = n == 0 ? 0 : x.size() / n;
  Tensor<S> out(x.shape());
  std::vector<S> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    S sq = 0;
    for (std::size_t j = 0; j < n; ++j) sq += x.value()[r * n + j] * x.value()[r * n + j];
    norms[r] = std::sqrt(sq);
    // NaN passes through so callers can report divergence
    if (norms[r] <= S(1e-12)) throw std::domain_error("degenerate norm");
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x.value()[r * n + j] / norms[r];
  }
  Tensor<S> saved = out;
  return make_result<S>(
      std::move(out), {x},
      [n, rows, saved = std::move(saved), norms = std::move(norms)](Node<S>& self) {
        Tensor<S>* gx = input_grad(self, 0);
        if (!gx) return;
        for (std::size_t r = 0; r < rows; ++r) {
          S dot = 0;
          for (std::size_t j = 0; j < n; ++j) dot += self.grad[r * n + j] * saved[r * n + j];
          for (std::size_t j = 0; j < n; ++j) {
            (*gx)[r * n + j] += (self.grad[r * n + j] - saved[r * n + j] * dot) / norms[r];
          }
        }
      });
}

template <typename S>
Var<S> gru_direction(const Var<S>& x, std::span<const std::size_t> lengths,
                     const Var<S>& w_ih, const Var<S>& w_hh, const Var<S>& b_ih,
                     const Var<S>& b_hh, bool reverse) {
  require_rank(x.shape(), 3, "gru input");
  const std::size_t batch = x.dim(0), steps = x.dim(1), din = x.dim(2);
  require(steps >= 1, "gru: empty sequence");
  require_rank(w_hh.shape(), 2, "gru w_hh");
  const std::size_t hid = w_hh.dim(1);
  const std::size_t g3 = 3 * hid;
  require(w_hh.dim(0) == g3, "gru: w_hh must be [3h, h]");
  require(w_ih.shape() == Shape{g3, din}, "gru: w_ih " + shape_string(w_ih.shape()) +
                                              " does not match input width " +
                                              std::to_string(din));
  require(b_ih.shape() == Shape{g3} && b_hh.shape() == Shape{g3},
          "gru: biases must be [3h]");
  require(lengths.size() == batch, "gru: need one length per batch row");
  std::vector<std::size_t> lens(lengths.begin(), lengths.end());
  for (std::size_t len : lens) {
    require(len >= 1 && len <= steps, "gru: sequence length " + std::to_string(len) +
                                          " outside [1, " + std::to_string(steps) + "]");
  }

  const auto eb = static_cast<Eigen::Index>(batch);
  const auto eh = static_cast<Eigen::Index>(hid);
  const auto eg3 = static_cast<Eigen::Index>(g3);

  // Input projections for every step at once: row b*T + t.
  RowMat<S> xi = as_mat(x.value(), batch * steps, din) *
                 as_mat(w_ih.value(), g3, din).transpose();
  xi.rowwise() += as_mat(b_ih.value(), 1, g3).row(0);

  const std::size_t cache = batch * steps * hid;
  auto saved = std::make_shared<std::vector<S>>(5 * cache);
  S* r_s = saved->data();
  S* z_s = r_s + cache;
  S* n_s = z_s + cache;
  S* hn_s = n_s + cache;  // W_hn h + b_hn
  S* hp_s = hn_s + cache;  // previous state

  Tensor<S> out({batch, steps, hid});
  RowMat<S> h = RowMat<S>::Zero(eb, eh);
  RowMat<S> hh(eb, eg3);
  const auto whh = as_mat(w_hh.value(), g3, hid);
  const auto bhh = as_mat(b_hh.value(), 1, g3);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    hh.noalias() = h * whh.transpose();
    hh.rowwise() += bhh.row(0);
    for (std::size_t b = 0; b < batch; ++b) {
      if (t >= lens[b]) continue;
      const S* xr = xi.data() + (b * steps + t) * g3;
      const S* hr = hh.data() + b * g3;
      const std::size_t c = (b * steps + t) * hid;
      for (std::size_t j = 0; j < hid; ++j) {
        const S r = S{1} / (S{1} + std::exp(-(xr[j] + hr[j])));
        const S z = S{1} / (S{1} + std::exp(-(xr[hid + j] + hr[hid + j])));
        const S n = std::tanh(xr[2 * hid + j] + r * hr[2 * hid + j]);
        const S prev = h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
        const S next = (S{1} - z) * n + z * prev;
        r_s[c + j] = r;
        z_s[c + j] = z;
        n_s[c + j] = n;
        hn_s[c + j] = hr[2 * hid + j];
        hp_s[c + j] = prev;
        out[c + j] = next;
        h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = next;
      }
    }
  }

  return make_result<S>(
      std::move(out), {x, w_ih, w_hh, b_ih, b_hh},
      [=, lens = std::move(lens)](Node<S>& self) {
        const S* r_s = saved->data();
        const S* z_s = r_s + cache;
        const S* n_s = z_s + cache;
        const S* hn_s = n_s + cache;
        const S* hp_s = hn_s + cache;
        const auto whh = as_mat(std::as_const(self.inputs[2]->value), g3, hid);
        RowMat<S> dxi = RowMat<S>::Zero(static_cast<Eigen::Index>(batch * steps), eg3);
        RowMat<S> dh = RowMat<S>::Zero(eb, eh);
        RowMat<S> dhh(eb, eg3);
        RowMat<S> hprev(eb, eh);
        Tensor<S>* gw_hh = input_grad(self, 2);
        Tensor<S>* gb_hh = input_grad(self, 4);
        for (std::size_t s = steps; s-- > 0;) {
          const std::size_t t = reverse ? steps - 1 - s : s;
          dhh.setZero();
          hprev.setZero();
          for (std::size_t b = 0; b < batch; ++b) {
            if (t >= lens[b]) continue;
            const std::size_t c = (b * steps + t) * hid;
            S* dx = dxi.data() + (b * steps + t) * g3;
            S* dg = dhh.data() + b * g3;
            for (std::size_t j = 0; j < hid; ++j) {
              const auto bj = std::pair{static_cast<Eigen::Index>(b),
                                        static_cast<Eigen::Index>(j)};
              const S dtot = dh(bj.first, bj.second) + self.grad[c + j];
              const S r = r_s[c + j], z = z_s[c + j], n = n_s[c + j];
              const S prev = hp_s[c + j];
              const S dn = dtot * (S{1} - z);
              const S dz = dtot * (prev - n);
              const S dn_pre = dn * (S{1} - n * n);
              const S dr_pre = dn_pre * hn_s[c + j] * r * (S{1} - r);
              const S dz_pre = dz * z * (S{1} - z);
              dx[j] = dr_pre;
              dx[hid + j] = dz_pre;
              dx[2 * hid + j] = dn_pre;
              dg[j] = dr_pre;
              dg[hid + j] = dz_pre;
              dg[2 * hid + j] = dn_pre * r;
              dh(bj.first, bj.second) = dtot * z;
              hprev(bj.first, bj.second) = prev;
            }
          }
          if (gw_hh) as_mat(*gw_hh, g3, hid).noalias() += dhh.transpose() * hprev;
          if (gb_hh) as_mat(*gb_hh, 1, g3) += dhh.colwise().sum();
          dh.noalias() += dhh * whh;
        }
        if (Tensor<S>* gx = input_grad(self, 0)) {
          as_mat(*gx, batch * steps, din).noalias() +=
              dxi * as_mat(std::as_const(self.inputs[1]->value), g3, din);
        }
        if (Tensor<S>* gw = input_grad(self, 1)) {
          as_mat(*gw, g3, din).noalias() +=
              dxi.transpose() * as_mat(std::as_const(self.inputs[0]->value), batch * steps, din);
        }
        if (Tensor<S>* gb = input_grad(self, 3)) {
          as_mat(*gb, 1, g3) += dxi.colwise().sum();
        }
      });
}

template <typename S>
Var<S> hinge_loss(const Var<S>& similarity, S margin) {
  require_rank(similarity.shape(), 2, "hinge_loss similarity");
  const std::size_t batch = similarity.dim(0);
  require(similarity.dim(1) == batch, "hinge_loss: similarity must be square");
  if (batch < 2) throw std::invalid_argument("batch too small for contrastive loss");
  const auto& sv = similarity.value();
  const S inv_m = S{1} / static_cast<S>(batch * (batch - 1));
  S total = 0;
  for (std::size_t k = 0; k < batch; ++k) {
    const S aligned = sv[k * batch + k];
    for (std::size_t l = 0; l < batch; ++l) {
      if (l == k) continue;
      // audio k against image l, then image k against audio l; NaN survives std::max
      // in this argument order
      total += std::max(sv[k * batch + l] - aligned + margin, S{0});
      total += std::max(sv[l * batch + k] - aligned + margin, S{0});
    }
  }
  return make_result<S>(
      Tensor<S>::scalar(total * inv_m), {similarity},
      [batch, margin, inv_m](Node<S>& self) {
        Tensor<S>* gs = input_grad(self, 0);
        if (!gs) return;
        const auto& sv = self.inputs[0]->value;
        const S g = self.grad[0] * inv_m;
        for (std::size_t k = 0; k < batch; ++k) {
          const S aligned = sv[k * batch + k];
          for (std::size_t l = 0; l < batch; ++l) {
            if (l == k) continue;
            if (sv[k * batch + l] - aligned + margin > S{0}) {
              (*gs)[k * batch + l] += g;
              (*gs)[k * batch + k] -= g;
            }
            if (sv[l * batch + k] - aligned + margin > S{0}) {
              (*gs)[l * batch + k] += g;
              (*gs)[k * batch + k] -= g;
            }
          }
        }
      });
}

#define VGS_INSTANTIATE_OPS(S)                                                   \
  template Var<S> add(const Var<S>&, const Var<S>&);                             \
  template Var<S> mul(const Var<S>&, const Var<S>&);                             \
  template Var<S> scale(const Var<S>&, S);                                       \
  template Var<S> sum(const Var<S>&);                                            \
  template Var<S> sum_axis(const Var<S>&, std::size_t);                          \
  template Var<S> linear(const Var<S>&, const Var<S>&, const Var<S>&);           \
  template Var<S> matmul_nt(const Var<S>&, const Var<S>&);                       \
  template Var<S> conv1d(const Var<S>&, const Var<S>&, const Var<S>&,            \
                         std::size_t);                                           \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, std::size_t, std::size_t); \
  template Var<S> batchnorm2d(const Var<S>&, const Var<S>&, const Var<S>&,       \
                              Tensor<S>&, Tensor<S>&, BatchNormMode, S, S);      \
  template Var<S> relu(const Var<S>&);                                           \
  template Var<S> tanh_op(const Var<S>&);                                        \
  template Var<S> sigmoid(const Var<S>&);                                        \
  template Var<S> softmax(const Var<S>&, std::size_t);                           \
  template Var<S> masked_time_softmax(const Var<S>&,                             \
                                      std::span<const std::size_t>);             \
  template Var<S> max_pool2d(const Var<S>&, std::size_t, std::size_t,            \
                             std::size_t);                                       \
  template Var<S> avg_pool2d(const Var<S>&, std::size_t, std::size_t);           \
  template Var<S> global_avg_pool(const Var<S>&);                                \
  template Var<S> concat(const std::vector<Var<S>>&, std::size_t);               \
  template Var<S> l2_normalize(const Var<S>&);                                   \
  template Var<S> gru_direction(const Var<S>&, std::span<const std::size_t>,     \
                                const Var<S>&, const Var<S>&, const Var<S>&,     \
                                const Var<S>&, bool);                            \
  template Var<S> hinge_loss(const Var<S>&, S);

VGS_INSTANTIATE_OPS(float)
VGS_INSTANTIATE_OPS(double)

#undef VGS_INSTANTIATE_OPS

}  // namespace vgs::core
