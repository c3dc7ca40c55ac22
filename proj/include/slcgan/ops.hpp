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

#ifndef SLCGAN_OPS_HPP_
#define SLCGAN_OPS_HPP_

#include <vector>

#include "slcgan/tensor.hpp"

// Differentiable primitives. Shapes are checked; mismatches throw ConfigError.
namespace slcgan::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
// log(max(a, eps)); gradient is zero where the clamp is active.
Tensor clamped_log(const Tensor& a, double eps);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// [N, D] -> [N]
Tensor row_sum(const Tensor& a);
// Row-wise inner product of two [N, D] tensors -> [N].
Tensor row_dot(const Tensor& a, const Tensor& b);
// Row-wise softmax of a rank-2 tensor.
Tensor softmax(const Tensor& logits);

Tensor reshape(const Tensor& a, Shape shape);
// [C] -> [N, C]
Tensor broadcast_rows(const Tensor& row, std::size_t n);

// x [N, in], weight [out, in], bias [out] (may be undefined) -> [N, out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// u^T W v for a row-major [rows, cols] W. Summed in a fixed order so the
// result does not depend on buffer alignment (vectorized reductions peel by
// address).
double bilinear(const double* w, std::size_t rows, std::size_t cols, const double* u, const double* v);

// weight / (u^T weight v) with u, v held constant. weight is viewed as
// [dim0, numel / dim0].
Tensor spectral_scale(const Tensor& weight, const std::vector<double>& u,
                      const std::vector<double>& v, double eps);

// x [N, C, H, W], weight [O, C, k, k], bias [O] (may be undefined).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::size_t stride, std::size_t padding);
Tensor avg_pool2(const Tensor& x);
Tensor upsample_nearest2(const Tensor& x);
// [N, C, H, W] -> [N, C]
Tensor global_sum_pool(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);

// Running statistics for batch normalization over all axes except 1.
struct BatchNormStats {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

// Normalizes x ([N, C] or [N, C, H, W]) per channel. In training mode batch
// statistics are used and the running statistics are updated.
Tensor batch_norm(const Tensor& x, BatchNormStats& stats, bool training);

// x * gamma + beta with per-sample, per-channel gamma/beta of shape [N, C].
Tensor channel_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta);

}  // namespace slcgan::ops

#endif  // SLCGAN_OPS_HPP_
