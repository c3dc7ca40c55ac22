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

#ifndef SLCGAN_SAMPLING_HPP_
#define SLCGAN_SAMPLING_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "slcgan/rng.hpp"
#include "slcgan/tensor.hpp"

namespace slcgan {

// ------------------------------------------------------------------ priors

struct LatentCode {
  Tensor values;  // [n, latent_dim], i.i.d. standard normal
};

struct ConditioningCode {
  std::vector<int> index;  // cluster id per sample, in [0, K)
  Tensor onehot;           // [n, K]
};

LatentCode sample_latent(std::size_t n, std::size_t latent_dim, Rng& rng);
// Uniform prior over [0, K).
ConditioningCode sample_condition(std::size_t n, std::size_t num_clusters, Rng& rng);
ConditioningCode make_condition(std::vector<int> index, std::size_t num_clusters);

// ------------------------------------------------------------ augmentation

struct AugmentationPolicy {
  // Fraction of image area kept by the random crop; aspect ratio is fixed.
  double crop_low = 0.8;
  double crop_high = 1.0;
  // Brightness, contrast and saturation multipliers drawn from [1 - s, 1 + s].
  double jitter = 0.4;
  double hflip_prob = 0.5;
  // Point batches ([N, D]) receive isotropic Gaussian noise of this stddev.
  double point_noise = 0.05;

  static AugmentationPolicy identity();
  void validate() const;
};

// Returns a randomly transformed copy of x ([N, C, H, W] images in [-1, 1], or
// [N, D] points). Output has the input's shape; images are clipped to [-1, 1].
Tensor augment(const Tensor& x, const AugmentationPolicy& policy, Rng& rng);

// ----------------------------------------------------------- toy mixtures

struct GaussianMixtureSpec {
  std::vector<std::array<double, 2>> centers;
  double sigma = 0.05;
  std::vector<double> weights;

  // `count` equally weighted centers evenly spaced on a circle.
  static GaussianMixtureSpec ring(std::size_t count, double radius, double sigma);
  void validate() const;
};

struct PointSample {
  Tensor points;            // [n, 2]
  std::vector<int> labels;  // generating component per point
};

PointSample gmm_sample(const GaussianMixtureSpec& spec, std::size_t n, Rng& rng);

// ---------------------------------------------------------------- datasets

// In-memory dataset of equally shaped samples with optional class labels.
class Dataset {
 public:
  Dataset(Shape sample_shape, std::vector<double> values, std::optional<std::vector<int>> labels,
          std::vector<std::string> class_names);

  static Dataset from_gmm(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed);
  // One subdirectory per class, or a flat directory of unlabeled images.
  // Pixels are decoded to [0, 1] and mapped to [-1, 1].
  static Dataset from_image_dir(const std::filesystem::path& dir);
  // IDX files train-images-idx3-ubyte / train-labels-idx1-ubyte; digits are
  // zero-padded from 28x28 to 32x32.
  static Dataset from_mnist(const std::filesystem::path& dir, std::size_t limit);
  // CIFAR-10 binary batches data_batch_{1..5}.bin.
  static Dataset from_cifar10(const std::filesystem::path& dir, std::size_t limit);

  std::size_t size() const { return size_; }
  const Shape& sample_shape() const { return sample_shape_; }
  std::size_t sample_numel() const { return sample_numel_; }
  bool has_labels() const { return labels_.has_value(); }
  const std::vector<int>& labels() const;
  std::size_t num_classes() const { return class_names_.size(); }
  const std::vector<std::string>& class_names() const { return class_names_; }

  // Stacks the given samples into [n, sample_shape...].
  Tensor gather(const std::vector<std::size_t>& indices) const;
  Tensor slice(std::size_t begin, std::size_t end) const;

 private:
  Shape sample_shape_;
  std::size_t sample_numel_ = 0;
  std::size_t size_ = 0;
  std::vector<double> values_;
  std::optional<std::vector<int>> labels_;
  std::vector<std::string> class_names_;
};

struct Batch {
  Tensor x;
  std::optional<std::vector<int>> labels;
};

// Epoch-shuffled minibatches; the final partial batch of each epoch is
// dropped. The permutation for epoch e depends only on (seed, e), so the
// sequence is reproducible and resumable from a Position.
class BatchIterator {
 public:
  struct Position {
    std::uint64_t epoch = 0;
    std::uint64_t cursor = 0;  // batches consumed within the epoch
  };

  BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                bool prefetch = false);
  BatchIterator(BatchIterator&&) = default;
  ~BatchIterator();

  Batch next();
  std::size_t batches_per_epoch() const { return batches_per_epoch_; }
  Position position() const { return position_; }
  void seek(Position position);

 private:
  Batch load(Position position) const;
  static Position advance(Position position, std::size_t per_epoch);

  const Dataset* dataset_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool prefetch_;
  std::size_t batches_per_epoch_;
  Position position_;
  std::optional<std::future<Batch>> pending_;
};

BatchIterator load_dataset(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                           bool prefetch = false);

}  // namespace slcgan

#endif  // SLCGAN_SAMPLING_HPP_
