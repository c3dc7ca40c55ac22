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

#ifndef SLCGAN_MODELS_HPP_
#define SLCGAN_MODELS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slcgan/layers.hpp"
#include "slcgan/rng.hpp"
#include "slcgan/tensor.hpp"

namespace slcgan {

enum class Family { mlp, conv };
enum class ClusterBackbone { small, resnet18 };

std::string to_string(Family family);
std::string to_string(ClusterBackbone backbone);

// Architecture of all three networks. Fields not used by `family` are ignored.
struct ArchConfig {
  Family family = Family::mlp;
  std::size_t latent_dim = 8;
  std::size_t num_clusters = 8;
  std::size_t embed_dim = 16;
  // When false, G and D carry no label pathway at all (unconditional mode).
  bool conditional = true;

  // mlp family
  std::size_t data_dim = 2;
  std::size_t hidden = 128;
  std::size_t c_hidden = 64;
  // Generator output is output_scale * tanh(.).
  double output_scale = 1.0;

  // conv family
  std::size_t channels = 32;
  std::size_t image_size = 32;
  std::size_t image_channels = 3;
  ClusterBackbone backbone = ClusterBackbone::small;

  // Width of the clustering network's layer before the last.
  std::size_t penultimate = 64;

  bool spectral_g = true;
  bool spectral_d = true;
  bool spectral_c = false;
  bool zero_init_c_head = false;

  static ArchConfig defaults(Family family);

  // Throws ConfigError naming the offending field.
  void validate() const;
  // (data_dim) or (channels, size, size).
  Shape sample_shape() const;
  // Canonical key=value text, used for checkpoint compatibility hashing.
  std::string canonical() const;
};

// Per-sample discriminator outputs. `joint` is undefined when D is
// unconditional.
struct ScorePair {
  Tensor unary;
  Tensor joint;
};

class Generator {
 public:
  Generator(const ArchConfig& arch, Rng& init_rng);
  Generator(Generator&&) = default;
  Generator& operator=(Generator&&) = default;

  // z [N, latent_dim]; label [N, K] (one-hot or probabilities) or nullopt.
  // Unconditional generators ignore the label.
  Tensor forward(const Tensor& z, const std::optional<Tensor>& label, bool training);

  ParamSet parameters();
  void freeze_spectral(bool frozen);
  std::uint64_t label_embedding_calls() const { return embed_calls_; }
  const ArchConfig& arch() const { return arch_; }

 private:
  // Norm layers of block i live at positions 2i and 2i + 1 of cbn_ / bn_.
  struct UpBlock {
    Conv2d conv1, conv2, shortcut;
  };

  Tensor norm(std::size_t index, const Tensor& h, const Tensor& embedding, bool training);
  Tensor up_block(UpBlock& block, const Tensor& x, const Tensor& embedding, bool training);

  ArchConfig arch_;
  Linear embed_;  // label -> embedding, only when conditional
  // mlp
  std::vector<Linear> dense_;
  std::vector<ConditionalBatchNorm> cbn_;
  std::vector<BatchNorm> bn_;
  // conv
  Linear stem_;
  std::vector<UpBlock> blocks_;
  BatchNorm out_bn_;
  Conv2d out_conv_;
  std::uint64_t embed_calls_ = 0;
};

class Discriminator {
 public:
  Discriminator(const ArchConfig& arch, Rng& init_rng);
  Discriminator(Discriminator&&) = default;
  Discriminator& operator=(Discriminator&&) = default;

  // Image-only feature vector phi(x).
  Tensor features(const Tensor& x, bool training);
  // unary = w . phi(x) + b; joint = unary + <E label, phi(x)>.
  // A missing label (or an unconditional D) leaves joint undefined.
  ScorePair forward(const Tensor& x, const std::optional<Tensor>& label, bool training);

  ParamSet parameters();
  void freeze_spectral(bool frozen);
  std::uint64_t label_embedding_calls() const { return embed_calls_; }
  std::size_t feature_dim() const { return feature_dim_; }

 private:
  struct DownBlock {
    Conv2d conv1, conv2, shortcut;
    bool preactivate = true;
    bool downsample = true;
    bool learned_shortcut = true;
  };

  ArchConfig arch_;
  std::size_t feature_dim_ = 0;
  std::vector<Linear> dense_;
  std::vector<DownBlock> blocks_;
  Linear unary_head_;
  Linear embed_;
  std::uint64_t embed_calls_ = 0;
};

class ClusteringNet {
 public:
  ClusteringNet(const ArchConfig& arch, Rng& init_rng);
  ClusteringNet(ClusteringNet&&) = default;
  ClusteringNet& operator=(ClusteringNet&&) = default;

  // Activations of the layer before the last (after global pooling for conv
  // backbones), [N, penultimate].
  Tensor features(const Tensor& x, bool training);
  Tensor logits(const Tensor& x, bool training);
  // softmax(logits).
  Tensor forward(const Tensor& x, bool training);
  // Final layer applied to precomputed features.
  Tensor head(const Tensor& features, bool training);

  ParamSet parameters();
  void freeze_spectral(bool frozen);
  std::uint64_t forward_calls() const { return forward_calls_; }
  std::size_t feature_dim() const;
  std::size_t num_clusters() const { return arch_.num_clusters; }

 private:
  struct ResBlock {
    Conv2d conv1, conv2, shortcut;
    BatchNorm bn1, bn2, shortcut_bn;
    bool projection = false;
  };

  ArchConfig arch_;
  std::vector<Linear> dense_;
  std::vector<Conv2d> convs_;
  Linear proj_;
  Conv2d stem_;
  BatchNorm stem_bn_;
  std::vector<ResBlock> res_blocks_;
  Linear head_;
  std::uint64_t forward_calls_ = 0;
};

// Process-wide evaluation counters, summed over every network instance.
namespace instrumentation {
std::uint64_t clustering_forwards();
std::uint64_t label_embeddings();
}  // namespace instrumentation

// Fingerprint of every parameter value; used to audit which network a
// training step touched.
std::uint64_t parameter_hash(const ParamSet& set);

void set_requires_grad(ParamSet& set, bool on);
void zero_grad(ParamSet& set);
// Throws NumericError naming the first non-finite parameter.
void check_finite(const ParamSet& set, const std::string& network);

}  // namespace slcgan

#endif  // SLCGAN_MODELS_HPP_
