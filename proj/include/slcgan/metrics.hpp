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

#ifndef SLCGAN_METRICS_HPP_
#define SLCGAN_METRICS_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slcgan/config.hpp"
#include "slcgan/models.hpp"
#include "slcgan/sampling.hpp"
#include "slcgan/tensor.hpp"

namespace slcgan::metrics {

// ------------------------------------------------------- generative quality

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased (n - 1) estimate
  std::size_t count = 0;
};

// features: [n, d] with n >= 2.
GaussianStats gaussian_stats(const Tensor& features);

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), evaluated as
// Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)) through symmetric eigendecompositions.
// Small negative results are clamped to 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// exp(mean KL(p_i || p_split)) per split; remainder samples are dropped.
// Returns (mean, std) across splits.
std::pair<double, double> inception_style_score(const Tensor& probs, std::size_t splits = 1);

// ---------------------------------------------------------------- clusters

// Cluster x class counts, row-major [clusters][classes].
struct ContingencyTable {
  std::size_t clusters = 0;
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(std::size_t k, std::size_t j) const { return counts[k * classes + j]; }
  std::uint64_t total() const;
};

ContingencyTable contingency(const std::vector<int>& assignments, const std::vector<int>& labels,
                             std::size_t clusters, std::size_t classes);

// Best injective cluster -> class matching (Hungarian), as a fraction of N.
// Throws MetricError when clusters > classes.
double clustering_accuracy(const ContingencyTable& table);

// The optimal injective map itself: result[k] is the class of cluster k.
std::vector<int> best_assignment(const ContingencyTable& table);

// (1/N) sum_k max_j counts[k][j].
double purity(const ContingencyTable& table);

std::vector<std::uint64_t> cluster_histogram(const std::vector<int>& assignments, std::size_t clusters);

struct KMeansResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centers;  // [K, d]
  double inertia = 0.0;
  std::size_t iterations = 0;
};

// Lloyd's algorithm from k-means++ seeding; stops at an assignment fixpoint or
// `max_iterations`.
KMeansResult kmeans(const Tensor& features, std::size_t clusters, std::uint64_t seed,
                    std::size_t max_iterations = 300);

struct ProbeOptions {
  double test_fraction = 0.2;
  std::size_t epochs = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// Softmax regression (one linear layer, nothing else) trained by full-batch
// gradient descent on a seeded train/test split. The step size is divided by
// the mean squared feature norm so raw features train stably.
ProbeResult linear_probe(const Tensor& features, const std::vector<int>& labels, std::size_t classes,
                         const ProbeOptions& options = {});

// ---------------------------------------------------------- toy mixtures

struct ModeCoverage {
  std::size_t covered = 0;
  std::vector<std::uint64_t> per_mode;  // samples within 3 sigma of each center
  double high_quality = 0.0;            // fraction of samples within 3 sigma of any center
  std::optional<double> purity;         // only when generation clusters are given
};

// A mode is covered when at least 1% of samples lie within 3 sigma of its
// center. Purity uses the (generation cluster -> nearest center) table over
// all samples.
ModeCoverage mode_coverage(const Tensor& points, const GaussianMixtureSpec& spec,
                           const std::optional<std::vector<int>>& clusters = std::nullopt,
                           std::size_t num_clusters = 0);

// ------------------------------------------------------ feature extractors

// Maps samples to a feature space for Frechet distance and to class
// posteriors for the inception-style score.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual Tensor features(const Tensor& x) = 0;
  // Throws MetricError when the extractor has no classifier head.
  virtual Tensor class_probabilities(const Tensor& x) = 0;
};

// Flattened samples; no class posteriors.
class IdentityExtractor : public FeatureExtractor {
 public:
  std::string name() const override { return "identity"; }
  Tensor features(const Tensor& x) override;
  Tensor class_probabilities(const Tensor& x) override;
};

// Fixed random network: features = relu(W x / sqrt(in)), posteriors =
// softmax(V features). Weights depend only on the seed.
class RandomProjectionExtractor : public FeatureExtractor {
 public:
  RandomProjectionExtractor(std::size_t input_dim, std::size_t feature_dim, std::size_t classes,
                            std::uint64_t seed);
  std::string name() const override { return "random_projection"; }
  Tensor features(const Tensor& x) override;
  Tensor class_probabilities(const Tensor& x) override;

 private:
  Eigen::MatrixXd projection_;
  Eigen::MatrixXd head_;
};

// Clustering network restored from a training checkpoint: features from the
// layer before the last, posteriors from its softmax.
class ClassifierExtractor : public FeatureExtractor {
 public:
  explicit ClassifierExtractor(const std::string& checkpoint);
  ~ClassifierExtractor() override;
  std::string name() const override { return "classifier"; }
  Tensor features(const Tensor& x) override;
  Tensor class_probabilities(const Tensor& x) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// nullptr for "none".
std::unique_ptr<FeatureExtractor> make_feature_extractor(const EvalConfig& eval, const Shape& sample_shape);

// --------------------------------------------------------------- reporting

// Named scalar and vector results of an evaluation.
struct Report {
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> vectors;

  std::string to_json() const;
  // metric,value rows; vectors expand to name[i].
  std::string to_csv() const;
};

}  // namespace slcgan::metrics

#endif  // SLCGAN_METRICS_HPP_
