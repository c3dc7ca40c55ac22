// Copyright 2026 The slcgan Authors.
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

#include "slcgan/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>

#include "slcgan/errors.hpp"

namespace slcgan::ops {

namespace {

using detail::Node;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;
using ConstMapVector = Eigen::Map<const Eigen::VectorXd>;
using MapVector = Eigen::Map<Eigen::VectorXd>;

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || (in.defined() && in.requires_grad());
  }
  if (needs) {
    node->requires_grad = true;
    for (auto& in : inputs) {
      if (in.defined()) node->inputs.push_back(in.node());
    }
    node->backward_fn = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Accumulation target for an input, or nullptr when it takes no gradient.
double* grad_of(const std::shared_ptr<Node>& node) {
  return node->requires_grad ? node->ensure_grad().data() : nullptr;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ConfigError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                      shape_string(a.shape()));
  }
}

// Elementwise unary op with derivative expressed through input and output.
template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx) {
  const auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(a.shape(), std::move(out), {a}, [dfdx](Node& self) {
    auto& src = self.inputs[0];
    double* g = grad_of(src);
    if (!g) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      g[i] += self.grad[i] * dfdx(src->value[i], self.value[i]);
    }
  });
}

// Returns (channels, spatial) for [N, C] or [N, C, H, W].
std::pair<std::size_t, std::size_t> channel_layout(const Tensor& x, const char* op) {
  if (x.rank() == 2) return {x.dim(1), 1};
  if (x.rank() == 4) return {x.dim(1), x.dim(2) * x.dim(3)};
  throw ConfigError(std::string(op) + ": expected rank 2 or 4, got " + shape_string(x.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (double* g = grad_of(in)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  const bool a_grad = a.requires_grad();
  const bool b_grad = b.requires_grad();
  return make_result(a.shape(), std::move(out), {a, b}, [a_grad, b_grad](Node& self) {
    // inputs holds only defined inputs, in order; both are defined here.
    auto& na = self.inputs[0];
    auto& nb = self.inputs[1];
    if (a_grad) {
      double* g = na->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * nb->value[i];
    }
    if (b_grad) {
      double* g = nb->ensure_grad().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * na->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(
      a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  // Subgradient 0 at the kink, so a hinge sitting exactly on its margin
  // contributes no gradient. NaN passes through so divergence stays visible.
  return unary(
      a, [](double x) { return x <= 0.0 ? 0.0 : x; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor clamped_log(const Tensor& a, double eps) {
  return unary(
      a, [eps](double x) { return std::log(std::max(x, eps)); },
      [eps](double x, double) { return x > eps ? 1.0 / x : 0.0; });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({}, {total}, {a}, [](Node& self) {
    if (double* g = grad_of(self.inputs[0])) {
      const double up = self.grad[0];
      for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) g[i] += up;
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ConfigError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor row_sum(const Tensor& a) {
  require_rank(a, 2, "row_sum");
  const std::size_t n = a.dim(0), d = a.dim(1);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i] += a.at(i * d + j);
  }
  return make_result({n}, std::move(out), {a}, [n, d](Node& self) {
    if (double* g = grad_of(self.inputs[0])) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[i];
      }
    }
  });
}

Tensor row_dot(const Tensor& a, const Tensor& b) { return row_sum(mul(a, b)); }

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.data().data() + i * k;
    const double peak = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = std::exp(row[j] - peak);
      total += out[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= total;
  }
  return make_result({n, k}, std::move(out), {logits}, [n, k](Node& self) {
    double* g = grad_of(self.inputs[0]);
    if (!g) return;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = self.value.data() + i * k;
      const double* up = self.grad.data() + i * k;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += p[j] * up[j];
      for (std::size_t j = 0; j < k; ++j) g[i * k + j] += p[j] * (up[j] - dot);
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ConfigError("reshape " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    if (double* g = grad_of(self.inputs[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor broadcast_rows(const Tensor& row, std::size_t n) {
  require_rank(row, 1, "broadcast_rows");
  const std::size_t c = row.dim(0);
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) std::copy(row.data().begin(), row.data().end(), out.begin() + i * c);
  return make_result({n, c}, std::move(out), {row}, [n, c](Node& self) {
    if (double* g = grad_of(self.inputs[0])) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear weight");
  const std::size_t n = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ConfigError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                      shape_string(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != out_dim)) {
    throw ConfigError("linear: bias shape " + shape_string(bias.shape()));
  }
  std::vector<double> out(n * out_dim);
  ConstMapMatrix X(x.data().data(), n, in);
  ConstMapMatrix W(weight.data().data(), out_dim, in);
  MapMatrix Y(out.data(), n, out_dim);
  Y.noalias() = X * W.transpose();
  if (has_bias) Y.rowwise() += ConstMapVector(bias.data().data(), out_dim).transpose();

  const bool x_grad = x.requires_grad(), w_grad = weight.requires_grad();
  const bool b_grad = has_bias && bias.requires_grad();
  return make_result(
      {n, out_dim}, std::move(out), {x, weight, bias},
      [n, in, out_dim, x_grad, w_grad, b_grad](Node& self) {
        auto& nx = self.inputs[0];
        auto& nw = self.inputs[1];
        ConstMapMatrix dY(self.grad.data(), n, out_dim);
        if (x_grad) {
          MapMatrix dX(nx->ensure_grad().data(), n, in);
          dX.noalias() += dY * ConstMapMatrix(nw->value.data(), out_dim, in);
        }
        if (w_grad) {
          MapMatrix dW(nw->ensure_grad().data(), out_dim, in);
          dW.noalias() += dY.transpose() * ConstMapMatrix(nx->value.data(), n, in);
        }
        if (b_grad) {
          // Fixed summation order; see bilinear().
          double* db = self.inputs[2]->ensure_grad().data();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t o = 0; o < out_dim; ++o) db[o] += self.grad[i * out_dim + o];
          }
        }
      });
}

double bilinear(const double* w, std::size_t rows, std::size_t cols, const double* u, const double* v) {
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * v[c];
    total += u[r] * acc;
  }
  return total;
}

Tensor spectral_scale(const Tensor& weight, const std::vector<double>& u,
                      const std::vector<double>& v, double eps) {
  const std::size_t rows = weight.dim(0);
  const std::size_t cols = weight.numel() / rows;
  if (u.size() != rows || v.size() != cols) {
    throw ConfigError("spectral_scale: power-iteration vectors do not match weight " +
                      shape_string(weight.shape()));
  }
  const double sigma = std::max(bilinear(weight.data().data(), rows, cols, u.data(), v.data()), eps);
  std::vector<double> out(weight.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = weight.at(i) / sigma;
  return make_result(weight.shape(), std::move(out), {weight}, [sigma, rows, cols, u, v](Node& self) {
    double* g = grad_of(self.inputs[0]);
    if (!g) return;
    // d(W/s)/dW with s = u^T W v: G/s - <G, W>/s^2 * u v^T.
    const auto& w = self.inputs[0]->value;
    double inner = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) inner += self.grad[i] * w[i];
    const double coeff = inner / (sigma * sigma);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        g[i] += self.grad[i] / sigma - coeff * u[r] * v[c];
      }
    }
  });
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w, o, k, stride, pad, oh, ow;
  std::size_t patch() const { return c * k * k; }
  std::size_t out_area() const { return oh * ow; }
};

// cols [C*k*k, OH*OW] for one sample.
void im2col(const double* img, const ConvGeometry& g, double* cols) {
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        double* row = cols + ((ch * g.k + ki) * g.k + kj) * g.out_area();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.h) &&
                                ix < static_cast<long>(g.w);
            row[oy * g.ow + ox] = inside ? img[(ch * g.h + iy) * g.w + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& g, double* img) {
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const double* row = cols + ((ch * g.k + ki) * g.k + kj) * g.out_area();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            img[(ch * g.h + iy) * g.w + ix] += row[oy * g.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d weight");
  if (weight.dim(1) != x.dim(1) || weight.dim(2) != weight.dim(3)) {
    throw ConfigError("conv2d: input " + shape_string(x.shape()) + " incompatible with kernel " +
                      shape_string(weight.shape()));
  }
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2),
                 stride, padding, 0, 0};
  if (g.h + 2 * g.pad < g.k || g.w + 2 * g.pad < g.k) {
    throw ConfigError("conv2d: kernel larger than padded input " + shape_string(x.shape()));
  }
  g.oh = (g.h + 2 * g.pad - g.k) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.k) / g.stride + 1;
  const bool has_bias = bias.defined();

  std::vector<double> out(g.n * g.o * g.out_area());
  std::vector<double> cols(g.patch() * g.out_area());
  ConstMapMatrix W(weight.data().data(), g.o, g.patch());
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(x.data().data() + s * g.c * g.h * g.w, g, cols.data());
    MapMatrix Y(out.data() + s * g.o * g.out_area(), g.o, g.out_area());
    Y.noalias() = W * ConstMapMatrix(cols.data(), g.patch(), g.out_area());
    if (has_bias) Y.colwise() += ConstMapVector(bias.data().data(), g.o);
  }

  const bool x_grad = x.requires_grad(), w_grad = weight.requires_grad();
  const bool b_grad = has_bias && bias.requires_grad();
  return make_result({g.n, g.o, g.oh, g.ow}, std::move(out), {x, weight, bias},
                     [g, x_grad, w_grad, b_grad](Node& self) {
                       auto& nx = self.inputs[0];
                       auto& nw = self.inputs[1];
                       std::vector<double> cols(g.patch() * g.out_area());
                       ConstMapMatrix W(nw->value.data(), g.o, g.patch());
                       double* dx = x_grad ? nx->ensure_grad().data() : nullptr;
                       double* dw = w_grad ? nw->ensure_grad().data() : nullptr;
                       double* db = b_grad ? self.inputs[2]->ensure_grad().data() : nullptr;
                       for (std::size_t s = 0; s < g.n; ++s) {
                         ConstMapMatrix dY(self.grad.data() + s * g.o * g.out_area(), g.o,
                                           g.out_area());
                         if (dw) {
                           im2col(nx->value.data() + s * g.c * g.h * g.w, g, cols.data());
                           MapMatrix(dw, g.o, g.patch()).noalias() +=
                               dY * ConstMapMatrix(cols.data(), g.patch(), g.out_area()).transpose();
                         }
                         if (db) {
                           const double* gy = self.grad.data() + s * g.o * g.out_area();
                           for (std::size_t o = 0; o < g.o; ++o) {
                             double acc = 0.0;
                             for (std::size_t i = 0; i < g.out_area(); ++i) acc += gy[o * g.out_area() + i];
                             db[o] += acc;
                           }
                         }
                         if (dx) {
                           MapMatrix(cols.data(), g.patch(), g.out_area()).noalias() =
                               W.transpose() * dY;
                           col2im(cols.data(), g, dx + s * g.c * g.h * g.w);
                         }
                       }
                     });
}

Tensor avg_pool2(const Tensor& x) {
  require_rank(x, 4, "avg_pool2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw ConfigError("avg_pool2: odd spatial size " + shape_string(x.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<double> out(n * c * oh * ow);
  const double* in = x.data().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const double* base = in + p * h * w + (2 * i) * w + 2 * j;
        out[p * oh * ow + i * ow + j] = 0.25 * (base[0] + base[1] + base[w] + base[w + 1]);
      }
    }
  }
  return make_result({n, c, oh, ow}, std::move(out), {x}, [n, c, h, w, oh, ow](Node& self) {
    double* g = grad_of(self.inputs[0]);
    if (!g) return;
    for (std::size_t p = 0; p < n * c; ++p) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const double up = 0.25 * self.grad[p * oh * ow + i * ow + j];
          double* base = g + p * h * w + (2 * i) * w + 2 * j;
          base[0] += up;
          base[1] += up;
          base[w] += up;
          base[w + 1] += up;
        }
      }
    }
  });
}

Tensor upsample_nearest2(const Tensor& x) {
  require_rank(x, 4, "upsample_nearest2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = 2 * h, ow = 2 * w;
  std::vector<double> out(n * c * oh * ow);
  const double* in = x.data().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        out[p * oh * ow + i * ow + j] = in[p * h * w + (i / 2) * w + j / 2];
      }
    }
  }
  return make_result({n, c, oh, ow}, std::move(out), {x}, [n, c, h, w, oh, ow](Node& self) {
    double* g = grad_of(self.inputs[0]);
    if (!g) return;
    for (std::size_t p = 0; p < n * c; ++p) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          g[p * h * w + (i / 2) * w + j / 2] += self.grad[p * oh * ow + i * ow + j];
        }
      }
    }
  });
}

Tensor global_sum_pool(const Tensor& x) {
  require_rank(x, 4, "global_sum_pool");
  const std::size_t n = x.dim(0), c = x.dim(1), area = x.dim(2) * x.dim(3);
  std::vector<double> out(n * c, 0.0);
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t i = 0; i < area; ++i) out[p] += x.at(p * area + i);
  }
  return make_result({n, c}, std::move(out), {x}, [n, c, area](Node& self) {
    if (double* g = grad_of(self.inputs[0])) {
      for (std::size_t p = 0; p < n * c; ++p) {
        for (std::size_t i = 0; i < area; ++i) g[p * area + i] += self.grad[p];
      }
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  return scale(global_sum_pool(x), 1.0 / static_cast<double>(x.dim(2) * x.dim(3)));
}

Tensor batch_norm(const Tensor& x, BatchNormStats& stats, bool training) {
  const auto [c, area] = channel_layout(x, "batch_norm");
  const std::size_t n = x.dim(0);
  if (stats.running_mean.size() != c) {
    throw ConfigError("batch_norm: " + std::to_string(stats.running_mean.size()) +
                      " channels configured, input " + shape_string(x.shape()));
  }
  const std::size_t m = n * area;
  std::vector<double> mean(c, 0.0), inv_std(c, 0.0);
  const double* in = x.data().data();
  if (training) {
    if (m < 2) throw ConfigError("batch_norm: training mode needs more than one value per channel");
    std::vector<double> var(c, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* p = in + (s * c + ch) * area;
        for (std::size_t i = 0; i < area; ++i) mean[ch] += p[i];
      }
    }
    for (auto& v : mean) v /= static_cast<double>(m);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* p = in + (s * c + ch) * area;
        for (std::size_t i = 0; i < area; ++i) var[ch] += (p[i] - mean[ch]) * (p[i] - mean[ch]);
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double biased = var[ch] / static_cast<double>(m);
      inv_std[ch] = 1.0 / std::sqrt(biased + stats.eps);
      const double unbiased = var[ch] / static_cast<double>(m - 1);
      stats.running_mean[ch] = (1.0 - stats.momentum) * stats.running_mean[ch] + stats.momentum * mean[ch];
      stats.running_var[ch] = (1.0 - stats.momentum) * stats.running_var[ch] + stats.momentum * unbiased;
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = stats.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(stats.running_var[ch] + stats.eps);
    }
  }
  std::vector<double> out(x.numel());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (s * c + ch) * area;
      for (std::size_t i = 0; i < area; ++i) out[off + i] = (in[off + i] - mean[ch]) * inv_std[ch];
    }
  }
  return make_result(x.shape(), std::move(out), {x}, [n, c, area, m, inv_std, training](Node& self) {
    double* g = grad_of(self.inputs[0]);
    if (!g) return;
    if (!training) {
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t off = (s * c + ch) * area;
          for (std::size_t i = 0; i < area; ++i) g[off + i] += self.grad[off + i] * inv_std[ch];
        }
      }
      return;
    }
    // dx = inv_std / m * (m * dy - sum(dy) - xhat * sum(dy * xhat))
    std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t off = (s * c + ch) * area;
        for (std::size_t i = 0; i < area; ++i) {
          sum_dy[ch] += self.grad[off + i];
          sum_dy_xhat[ch] += self.grad[off + i] * self.value[off + i];
        }
      }
    }
    const double md = static_cast<double>(m);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t off = (s * c + ch) * area;
        for (std::size_t i = 0; i < area; ++i) {
          g[off + i] += inv_std[ch] / md *
                        (md * self.grad[off + i] - sum_dy[ch] - self.value[off + i] * sum_dy_xhat[ch]);
        }
      }
    }
  });
}

Tensor channel_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  const auto [c, area] = channel_layout(x, "channel_affine");
  const std::size_t n = x.dim(0);
  const Shape expected{n, c};
  if (gamma.shape() != expected || beta.shape() != expected) {
    throw ConfigError("channel_affine: gamma/beta must be " + shape_string(expected));
  }
  std::vector<double> out(x.numel());
  for (std::size_t p = 0; p < n * c; ++p) {
    const double gm = gamma.at(p), bt = beta.at(p);
    for (std::size_t i = 0; i < area; ++i) out[p * area + i] = x.at(p * area + i) * gm + bt;
  }
  const bool x_grad = x.requires_grad(), g_grad = gamma.requires_grad(), b_grad = beta.requires_grad();
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [n, c, area, x_grad, g_grad, b_grad](Node& self) {
                       auto& nx = self.inputs[0];
                       auto& ng = self.inputs[1];
                       auto& nb = self.inputs[2];
                       double* dx = x_grad ? nx->ensure_grad().data() : nullptr;
                       double* dg = g_grad ? ng->ensure_grad().data() : nullptr;
                       double* dbt = b_grad ? nb->ensure_grad().data() : nullptr;
                       for (std::size_t p = 0; p < n * c; ++p) {
                         const double gm = ng->value[p];
                         for (std::size_t i = 0; i < area; ++i) {
                           const double up = self.grad[p * area + i];
                           if (dx) dx[p * area + i] += up * gm;
                           if (dg) dg[p] += up * nx->value[p * area + i];
                           if (dbt) dbt[p] += up;
                         }
                       }
                     });
}

}  // namespace slcgan::ops
