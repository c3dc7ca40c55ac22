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

#ifndef SLCGAN_LAYERS_HPP_
#define SLCGAN_LAYERS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "slcgan/ops.hpp"
#include "slcgan/rng.hpp"
#include "slcgan/tensor.hpp"

namespace slcgan {

inline constexpr double kSpectralEps = 1e-12;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct NamedBuffer {
  std::string name;
  std::vector<double>* values;
};

// Flat registry of a network's trainable tensors and persistent buffers.
struct ParamSet {
  std::vector<NamedTensor> params;
  std::vector<NamedBuffer> buffers;

  std::size_t parameter_count() const;
};

// Power-iteration vectors for one weight, viewed as [rows, numel / rows].
struct SpectralState {
  std::vector<double> u;
  std::vector<double> v;
};

struct SpectralResult {
  std::vector<double> weight;
  double sigma = 0.0;
};

// Runs `iterations` power-iteration steps on `state`, then divides the weight
// by sigma = u^T W v. sigma is floored at kSpectralEps.
SpectralResult spectral_normalize(const std::vector<double>& weight, std::size_t rows,
                                  SpectralState& state, int iterations = 1);

SpectralState make_spectral_state(std::size_t rows, std::size_t cols, Rng& rng);

enum class Init { orthogonal, he_normal, zeros };

std::vector<double> init_weight(Init init, std::size_t rows, std::size_t cols, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, bool bias, bool spectral, Init init, Rng& rng);

  Tensor forward(const Tensor& x, bool training);
  // The weight actually applied, including spectral scaling.
  Tensor effective_weight(bool training);

  void collect(const std::string& prefix, ParamSet& set);
  void freeze_spectral(bool frozen) { spectral_frozen_ = frozen; }
  std::size_t in_features() const { return weight_.dim(1); }
  std::size_t out_features() const { return weight_.dim(0); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor weight_;
  Tensor bias_;
  std::optional<SpectralState> spectral_;
  bool spectral_frozen_ = false;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
         std::size_t padding, bool bias, bool spectral, Init init, Rng& rng);

  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, ParamSet& set);
  void freeze_spectral(bool frozen) { spectral_frozen_ = frozen; }

 private:
  Tensor weight_;
  Tensor bias_;
  std::size_t stride_ = 1;
  std::size_t padding_ = 0;
  std::optional<SpectralState> spectral_;
  bool spectral_frozen_ = false;
};

// Batch norm with a learned per-channel affine.
class BatchNorm {
 public:
  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels);

  Tensor forward(const Tensor& x, bool training);
  void collect(const std::string& prefix, ParamSet& set);

 private:
  ops::BatchNormStats stats_;
  Tensor gamma_;
  Tensor beta_;
};

// Batch norm whose per-sample gain and bias are linear in a label embedding:
// gamma = 1 + W_g e, beta = W_b e.
class ConditionalBatchNorm {
 public:
  ConditionalBatchNorm() = default;
  ConditionalBatchNorm(std::size_t channels, std::size_t embed_dim, bool spectral, Rng& rng);

  Tensor forward(const Tensor& x, const Tensor& embedding, bool training);
  void collect(const std::string& prefix, ParamSet& set);
  void freeze_spectral(bool frozen);

 private:
  ops::BatchNormStats stats_;
  Linear gain_;
  Linear bias_;
};

}  // namespace slcgan

#endif  // SLCGAN_LAYERS_HPP_
