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

#include "slcgan/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "slcgan/errors.hpp"

namespace slcgan {

namespace {


// Plain loops rather than Eigen reductions: vectorized reductions peel by
// buffer alignment, which would make results depend on heap layout.
void normalize_into(const std::vector<double>& src, std::vector<double>& dst) {
  double sq = 0.0;
  for (double x : src) sq += x * x;
  const double norm = std::max(std::sqrt(sq), kSpectralEps);
  dst.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / norm;
}

// W^T u for a row-major [rows, cols] W.
std::vector<double> transpose_times(const double* w, std::size_t rows, std::size_t cols, const double* u) {
  std::vector<double> out(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += w[r * cols + c] * u[r];
  }
  return out;
}

std::vector<double> times(const double* w, std::size_t rows, std::size_t cols, const double* v) {
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * v[c];
    out[r] = acc;
  }
  return out;
}

void power_iteration(const double* weight, std::size_t rows, std::size_t cols, SpectralState& state,
                     int iterations) {
  for (int it = 0; it < iterations; ++it) {
    normalize_into(transpose_times(weight, rows, cols, state.u.data()), state.v);
    normalize_into(times(weight, rows, cols, state.v.data()), state.u);
  }
}

// Sets v to the normalized W^T u so inference-mode calls made before any
// training step see a usable sigma. The first power iteration recomputes the
// same v, so training is unaffected.
void prime_right_vector(const double* weight, std::size_t rows, std::size_t cols, SpectralState& state) {
  normalize_into(transpose_times(weight, rows, cols, state.u.data()), state.v);
}

}  // namespace

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

SpectralResult spectral_normalize(const std::vector<double>& weight, std::size_t rows,
                                  SpectralState& state, int iterations) {
  if (rows == 0 || weight.size() % rows != 0) {
    throw ConfigError("spectral_normalize: weight of size " + std::to_string(weight.size()) +
                      " cannot be viewed with " + std::to_string(rows) + " rows");
  }
  const std::size_t cols = weight.size() / rows;
  if (state.u.size() != rows) throw ConfigError("spectral_normalize: state.u has wrong length");
  power_iteration(weight.data(), rows, cols, state, iterations);
  if (state.v.size() != cols) state.v.assign(cols, 0.0);

  SpectralResult result;
  result.sigma = std::max(ops::bilinear(weight.data(), rows, cols, state.u.data(), state.v.data()), kSpectralEps);
  result.weight.resize(weight.size());
  for (std::size_t i = 0; i < weight.size(); ++i) result.weight[i] = weight[i] / result.sigma;
  return result;
}

SpectralState make_spectral_state(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> u(rows);
  for (auto& x : u) x = rng.normal();
  SpectralState state;
  normalize_into(u, state.u);
  state.v.assign(cols, 0.0);
  return state;
}

std::vector<double> init_weight(Init init, std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> w(rows * cols, 0.0);
  switch (init) {
    case Init::zeros:
      break;
    case Init::he_normal: {
      const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
      for (auto& x : w) x = rng.normal() * stddev;
      break;
    }
    case Init::orthogonal: {
      const std::size_t tall = std::max(rows, cols), wide = std::min(rows, cols);
      Eigen::MatrixXd g(tall, wide);
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
      const Eigen::MatrixXd r = qr.matrixQR();
      for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
      }
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
          w[i * cols + j] = rows >= cols ? q(a, b) : q(b, a);
        }
      }
      break;
    }
  }
  return w;
}

Linear::Linear(std::size_t in, std::size_t out, bool bias, bool spectral, Init init, Rng& rng) {
  if (in == 0 || out == 0) throw ConfigError("Linear: zero-sized layer");
  weight_ = Tensor::parameter({out, in}, init_weight(init, out, in, rng));
  if (bias) bias_ = Tensor::parameter({out}, std::vector<double>(out, 0.0));
  if (spectral) {
    spectral_ = make_spectral_state(out, in, rng);
    prime_right_vector(weight_.data().data(), out, in, *spectral_);
  }
}

Tensor Linear::effective_weight(bool training) {
  if (!spectral_) return weight_;
  if (training && !spectral_frozen_) {
    power_iteration(weight_.data().data(), weight_.dim(0), weight_.dim(1), *spectral_, 1);
  }
  return ops::spectral_scale(weight_, spectral_->u, spectral_->v, kSpectralEps);
}

Tensor Linear::forward(const Tensor& x, bool training) {
  return ops::linear(x, effective_weight(training), bias_);
}

void Linear::collect(const std::string& prefix, ParamSet& set) {
  set.params.push_back({prefix + ".weight", weight_});
  if (bias_.defined()) set.params.push_back({prefix + ".bias", bias_});
  if (spectral_) {
    set.buffers.push_back({prefix + ".sn_u", &spectral_->u});
    set.buffers.push_back({prefix + ".sn_v", &spectral_->v});
  }
}

Conv2d::Conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
               std::size_t padding, bool bias, bool spectral, Init init, Rng& rng)
    : stride_(stride), padding_(padding) {
  const std::size_t fan_in = in * kernel * kernel;
  weight_ = Tensor::parameter({out, in, kernel, kernel}, init_weight(init, out, fan_in, rng));
  if (bias) bias_ = Tensor::parameter({out}, std::vector<double>(out, 0.0));
  if (spectral) {
    spectral_ = make_spectral_state(out, fan_in, rng);
    prime_right_vector(weight_.data().data(), out, fan_in, *spectral_);
  }
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
  Tensor w = weight_;
  if (spectral_) {
    const std::size_t rows = weight_.dim(0), cols = weight_.numel() / rows;
    if (training && !spectral_frozen_) power_iteration(weight_.data().data(), rows, cols, *spectral_, 1);
    w = ops::spectral_scale(weight_, spectral_->u, spectral_->v, kSpectralEps);
  }
  return ops::conv2d(x, w, bias_, stride_, padding_);
}

void Conv2d::collect(const std::string& prefix, ParamSet& set) {
  set.params.push_back({prefix + ".weight", weight_});
  if (bias_.defined()) set.params.push_back({prefix + ".bias", bias_});
  if (spectral_) {
    set.buffers.push_back({prefix + ".sn_u", &spectral_->u});
    set.buffers.push_back({prefix + ".sn_v", &spectral_->v});
  }
}

BatchNorm::BatchNorm(std::size_t channels)
    : stats_(channels),
      gamma_(Tensor::parameter({channels}, std::vector<double>(channels, 1.0))),
      beta_(Tensor::parameter({channels}, std::vector<double>(channels, 0.0))) {}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
  const std::size_t n = x.dim(0);
  return ops::channel_affine(ops::batch_norm(x, stats_, training), ops::broadcast_rows(gamma_, n),
                             ops::broadcast_rows(beta_, n));
}

void BatchNorm::collect(const std::string& prefix, ParamSet& set) {
  set.params.push_back({prefix + ".gamma", gamma_});
  set.params.push_back({prefix + ".beta", beta_});
  set.buffers.push_back({prefix + ".running_mean", &stats_.running_mean});
  set.buffers.push_back({prefix + ".running_var", &stats_.running_var});
}

ConditionalBatchNorm::ConditionalBatchNorm(std::size_t channels, std::size_t embed_dim,
                                           bool spectral, Rng& rng)
    : stats_(channels),
      gain_(embed_dim, channels, false, spectral, Init::orthogonal, rng),
      bias_(embed_dim, channels, false, spectral, Init::orthogonal, rng) {}

Tensor ConditionalBatchNorm::forward(const Tensor& x, const Tensor& embedding, bool training) {
  Tensor gamma = ops::add_scalar(gain_.forward(embedding, training), 1.0);
  Tensor beta = bias_.forward(embedding, training);
  return ops::channel_affine(ops::batch_norm(x, stats_, training), gamma, beta);
}

void ConditionalBatchNorm::collect(const std::string& prefix, ParamSet& set) {
  gain_.collect(prefix + ".gain", set);
  bias_.collect(prefix + ".bias", set);
  set.buffers.push_back({prefix + ".running_mean", &stats_.running_mean});
  set.buffers.push_back({prefix + ".running_var", &stats_.running_var});
}

void ConditionalBatchNorm::freeze_spectral(bool frozen) {
  gain_.freeze_spectral(frozen);
  bias_.freeze_spectral(frozen);
}

}  // namespace slcgan
