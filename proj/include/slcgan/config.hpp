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

#ifndef SLCGAN_CONFIG_HPP_
#define SLCGAN_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "slcgan/losses.hpp"
#include "slcgan/models.hpp"
#include "slcgan/sampling.hpp"

namespace slcgan {

enum class TrainMode { ugan, cgan, slcgan };

std::string to_string(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::slcgan;
  std::size_t num_clusters = 8;
  std::size_t d_steps_per_g = 2;
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  std::size_t batch_size = 256;
  std::size_t iterations = 1000;
  losses::LossWeights lambdas;
  std::uint64_t seed = 0;
  bool deterministic = true;
  // Let the mutual-information term also update the clustering network.
  bool mi_updates_c = false;
  // 0 writes only the final checkpoint.
  std::size_t checkpoint_every = 0;

  void validate() const;
};

enum class DataSource { gmm, image_dir, mnist, cifar10 };

std::string to_string(DataSource source);

struct DataConfig {
  DataSource source = DataSource::gmm;
  // Dataset location; relative or empty paths fall back to $SLCGAN_DATA_ROOT.
  std::string path;
  // Number of points for gmm; sample limit for standard datasets (0 = all).
  std::size_t size = 50000;
  std::uint64_t seed = 1234;
  GaussianMixtureSpec gmm = GaussianMixtureSpec::ring(8, 1.0, 0.05);
};

struct EvalConfig {
  std::size_t every = 0;
  std::size_t num_samples = 10000;
  // none | identity | random_projection | classifier:<checkpoint>
  std::string feature_extractor = "none";
  std::size_t feature_dim = 64;
  std::size_t feature_classes = 10;
  std::uint64_t feature_seed = 7;
  std::size_t is_splits = 1;
};

// Everything a run needs. Text form: one `section.key = value` per line,
// `#` comments, unknown keys rejected.
struct RunConfig {
  TrainConfig train;
  ArchConfig arch = ArchConfig::defaults(Family::mlp);
  DataConfig data;
  AugmentationPolicy aug;
  EvalConfig eval;
  std::string out_dir = "runs/default";

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  // Resolved form with every key; the output directory is omitted when
  // `include_output` is false (checkpoints embed the config that way).
  std::string to_text(bool include_output = true) const;
  // Copies cluster count and conditioning from `train` into `arch`.
  void resolve();
  void validate() const;
};

// Fully resolved config for the 8-mode unit-circle ring benchmark
// (sigma 0.05, batch 256, 4000 iterations).
RunConfig gmm_ring_config(TrainMode mode, std::uint64_t seed);

}  // namespace slcgan

#endif  // SLCGAN_CONFIG_HPP_
