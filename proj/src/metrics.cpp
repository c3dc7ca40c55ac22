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

#include "slcgan/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "slcgan/checkpoint.hpp"
#include "slcgan/errors.hpp"
#include "slcgan/trainer.hpp"

namespace slcgan::metrics {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> as_matrix(const Tensor& x) {
  if (x.rank() < 1 || x.dim(0) == 0) throw MetricError("expected a non-empty [n, ...] tensor");
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  return {x.data().data(), n, static_cast<Eigen::Index>(x.numel()) / n};
}

Tensor to_tensor(const RowMatrix& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  return Tensor::from({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(values));
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

// ------------------------------------------------------- generative quality

GaussianStats gaussian_stats(const Tensor& features) {
  auto x = as_matrix(features);
  if (x.rows() < 2) throw MetricError("gaussian_stats: need at least two samples");
  GaussianStats s;
  s.count = static_cast<std::size_t>(x.rows());
  s.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  s.covariance = (0.5 * (s.covariance + s.covariance.transpose())).eval();
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows()) {
    throw MetricError("frechet_distance: dimension mismatch (" + std::to_string(a.mean.size()) + " vs " +
                      std::to_string(b.mean.size()) + ")");
  }
  const Eigen::MatrixXd root_a = sym_sqrt(a.covariance);
  const Eigen::MatrixXd inner = root_a * b.covariance * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  return std::max(d, 0.0);
}

std::pair<double, double> inception_style_score(const Tensor& probs, std::size_t splits) {
  if (probs.rank() != 2 || probs.dim(0) == 0) throw MetricError("inception_style_score: empty probability set");
  if (splits == 0) throw MetricError("inception_style_score: splits must be >= 1");
  const std::size_t n = probs.dim(0);
  const std::size_t k = probs.dim(1);
  const std::size_t per = n / splits;
  if (per == 0) throw MetricError("inception_style_score: more splits than samples");
  const auto p = probs.data();
  std::vector<double> scores;
  for (std::size_t s = 0; s < splits; ++s) {
    std::vector<double> marginal(k, 0.0);
    for (std::size_t i = s * per; i < (s + 1) * per; ++i) {
      for (std::size_t c = 0; c < k; ++c) marginal[c] += p[i * k + c];
    }
    for (double& m : marginal) m /= static_cast<double>(per);
    double kl = 0.0;
    for (std::size_t i = s * per; i < (s + 1) * per; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        const double v = p[i * k + c];
        if (v > 0.0) kl += v * (std::log(v) - std::log(marginal[c]));
      }
    }
    scores.push_back(std::exp(kl / static_cast<double>(per)));
  }
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(splits);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  return {mean, std::sqrt(var / static_cast<double>(splits))};
}

// ---------------------------------------------------------------- clusters

std::uint64_t ContingencyTable::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

ContingencyTable contingency(const std::vector<int>& assignments, const std::vector<int>& labels,
                             std::size_t clusters, std::size_t classes) {
  if (assignments.size() != labels.size()) throw MetricError("contingency: assignment and label counts differ");
  ContingencyTable t{clusters, classes, std::vector<std::uint64_t>(clusters * classes, 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int k = assignments[i];
    const int j = labels[i];
    if (k < 0 || static_cast<std::size_t>(k) >= clusters) throw MetricError("contingency: cluster id out of range");
    if (j < 0 || static_cast<std::size_t>(j) >= classes) throw MetricError("contingency: class id out of range");
    ++t.counts[static_cast<std::size_t>(k) * classes + static_cast<std::size_t>(j)];
  }
  return t;
}

std::vector<int> best_assignment(const ContingencyTable& table) {
  const std::size_t rows = table.clusters;
  const std::size_t cols = table.classes;
  if (rows > cols) {
    throw MetricError("clustering_accuracy: " + std::to_string(rows) + " clusters cannot map injectively onto " +
                      std::to_string(cols) + " classes");
  }
  // Shortest augmenting path Hungarian method on cost = -count, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0), way_cost(cols + 1);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(way_cost.begin(), way_cost.end(), inf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cost = -static_cast<double>(table.at(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cost < way_cost[j]) {
          way_cost[j] = cost;
          way[j] = j0;
        }
        if (way_cost[j] < delta) {
          delta = way_cost[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          way_cost[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= cols; ++j) {
    if (match[j] != 0) result[match[j] - 1] = static_cast<int>(j - 1);
  }
  return result;
}

double clustering_accuracy(const ContingencyTable& table) {
  const auto n = table.total();
  if (n == 0) throw MetricError("clustering_accuracy: empty table");
  const auto map = best_assignment(table);
  std::uint64_t matched = 0;
  for (std::size_t k = 0; k < map.size(); ++k) matched += table.at(k, static_cast<std::size_t>(map[k]));
  return static_cast<double>(matched) / static_cast<double>(n);
}

double purity(const ContingencyTable& table) {
  const auto n = table.total();
  if (n == 0) throw MetricError("purity: empty table");
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < table.clusters; ++k) {
    std::uint64_t best = 0;
    for (std::size_t j = 0; j < table.classes; ++j) best = std::max(best, table.at(k, j));
    sum += best;
  }
  return static_cast<double>(sum) / static_cast<double>(n);
}

std::vector<std::uint64_t> cluster_histogram(const std::vector<int>& assignments, std::size_t clusters) {
  std::vector<std::uint64_t> counts(clusters, 0);
  for (int a : assignments) {
    if (a < 0 || static_cast<std::size_t>(a) >= clusters) throw MetricError("cluster_histogram: id out of range");
    ++counts[static_cast<std::size_t>(a)];
  }
  return counts;
}

KMeansResult kmeans(const Tensor& features, std::size_t clusters, std::uint64_t seed, std::size_t max_iterations) {
  auto x = as_matrix(features);
  const auto n = static_cast<std::size_t>(x.rows());
  if (clusters == 0 || clusters > n) {
    throw MetricError("kmeans: K = " + std::to_string(clusters) + " must be in [1, " + std::to_string(n) + "]");
  }
  Rng rng(seed);
  KMeansResult r;
  r.centers.resize(static_cast<Eigen::Index>(clusters), x.cols());
  // k-means++ seeding.
  r.centers.row(0) = x.row(static_cast<Eigen::Index>(rng.index(n)));
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < clusters; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      dist[i] = std::min(dist[i], (x.row(ii) - r.centers.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
      total += dist[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= dist[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point already sits on a center: take the first unused one.
      pick = c;
    }
    r.centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
  }

  r.assignments.assign(n, -1);
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    bool changed = false;
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const double d = (r.centers.rowwise() - x.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      r.inertia += d;
      if (r.assignments[i] != static_cast<int>(best)) {
        r.assignments[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(r.centers.rows(), r.centers.cols());
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(r.assignments[i]) += x.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(r.assignments[i])];
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      // Empty clusters keep their previous center.
      if (counts[c] > 0) r.centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
    }
  }
  return r;
}

ProbeResult linear_probe(const Tensor& features, const std::vector<int>& labels, std::size_t classes,
                         const ProbeOptions& options) {
  auto x = as_matrix(features);
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw MetricError("linear_probe: feature and label counts differ");
  if (classes < 2) throw MetricError("linear_probe: need at least two classes");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw MetricError("linear_probe: test_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(options.test_fraction * static_cast<double>(n))));
  if (n_test >= n) throw MetricError("linear_probe: split leaves no training samples");
  const std::size_t n_train = n - n_test;

  const auto d = x.cols();
  Eigen::MatrixXd train(static_cast<Eigen::Index>(n_train), d + 1);
  Eigen::MatrixXd test(static_cast<Eigen::Index>(n_test), d + 1);
  std::vector<int> y_train, y_test;
  std::vector<bool> seen(classes, false);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[order[i]];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw MetricError("linear_probe: label out of range");
    auto& dst = i < n_train ? train : test;
    const auto row = static_cast<Eigen::Index>(i < n_train ? i : i - n_train);
    dst.row(row).head(d) = x.row(static_cast<Eigen::Index>(order[i]));
    dst(row, d) = 1.0;
    if (i < n_train) {
      y_train.push_back(y);
      seen[static_cast<std::size_t>(y)] = true;
    } else {
      y_test.push_back(y);
    }
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (!seen[c]) throw MetricError("linear_probe: class " + std::to_string(c) + " absent from the training split");
  }

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < n_train; ++i) onehot(static_cast<Eigen::Index>(i), y_train[i]) = 1.0;
  const double scale = std::max(1.0, train.rowwise().squaredNorm().mean());
  const double lr = options.learning_rate / scale;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d + 1, static_cast<Eigen::Index>(classes));
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Eigen::MatrixXd logits = train * w;
    logits = logits.colwise() - logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = logits.array().exp();
    p = p.array().colwise() / p.rowwise().sum().array();
    const Eigen::MatrixXd grad = train.transpose() * (p - onehot) / static_cast<double>(n_train);
    const double step = epoch < options.epochs / 2 ? lr : 0.1 * lr;
    w -= step * grad;
  }
  auto accuracy = [&](const Eigen::MatrixXd& m, const std::vector<int>& y) {
    const Eigen::MatrixXd logits = m * w;
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      correct += arg == y[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(correct) / static_cast<double>(y.size());
  };
  return {accuracy(train, y_train), accuracy(test, y_test)};
}

// ---------------------------------------------------------- toy mixtures

ModeCoverage mode_coverage(const Tensor& points, const GaussianMixtureSpec& spec,
                           const std::optional<std::vector<int>>& clusters, std::size_t num_clusters) {
  spec.validate();
  if (points.rank() != 2 || points.dim(1) != 2) throw MetricError("mode_coverage: points must be [n, 2]");
  const std::size_t n = points.dim(0);
  if (n == 0) throw MetricError("mode_coverage: no points");
  const std::size_t modes = spec.centers.size();
  if (clusters && clusters->size() != n) throw MetricError("mode_coverage: cluster ids do not match points");
  const double radius = 3.0 * spec.sigma;
  ModeCoverage out;
  out.per_mode.assign(modes, 0);
  std::vector<int> nearest(n, 0);
  std::uint64_t inside = 0;
  const auto p = points.data();
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes; ++m) {
      const double d = std::hypot(p[2 * i] - spec.centers[m][0], p[2 * i + 1] - spec.centers[m][1]);
      if (d < best) {
        best = d;
        nearest[i] = static_cast<int>(m);
      }
    }
    if (best <= radius) {
      ++out.per_mode[static_cast<std::size_t>(nearest[i])];
      ++inside;
    }
  }
  for (auto c : out.per_mode) out.covered += 100 * c >= n;
  out.high_quality = static_cast<double>(inside) / static_cast<double>(n);
  if (clusters) {
    std::size_t k = num_clusters;
    if (k == 0) k = static_cast<std::size_t>(*std::max_element(clusters->begin(), clusters->end())) + 1;
    out.purity = purity(contingency(*clusters, nearest, k, modes));
  }
  return out;
}

// ------------------------------------------------------ feature extractors

Tensor IdentityExtractor::features(const Tensor& x) {
  auto m = as_matrix(x);
  return to_tensor(m);
}

Tensor IdentityExtractor::class_probabilities(const Tensor&) {
  throw MetricError("identity feature extractor has no class posteriors; inception-style score needs a classifier");
}

RandomProjectionExtractor::RandomProjectionExtractor(std::size_t input_dim, std::size_t feature_dim,
                                                     std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  projection_.resize(static_cast<Eigen::Index>(feature_dim), static_cast<Eigen::Index>(input_dim));
  for (Eigen::Index i = 0; i < projection_.size(); ++i) projection_.data()[i] = rng.normal() / std::sqrt(static_cast<double>(input_dim));
  head_.resize(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(feature_dim));
  for (Eigen::Index i = 0; i < head_.size(); ++i) head_.data()[i] = rng.normal() / std::sqrt(static_cast<double>(feature_dim));
}

Tensor RandomProjectionExtractor::features(const Tensor& x) {
  auto m = as_matrix(x);
  if (m.cols() != projection_.cols()) throw MetricError("random_projection: input dimension mismatch");
  RowMatrix f = (m * projection_.transpose()).cwiseMax(0.0);
  return to_tensor(f);
}

Tensor RandomProjectionExtractor::class_probabilities(const Tensor& x) {
  Tensor f = features(x);
  auto fm = as_matrix(f);
  RowMatrix logits = fm * head_.transpose();
  logits = logits.colwise() - logits.rowwise().maxCoeff();
  RowMatrix p = logits.array().exp();
  p = p.array().colwise() / p.rowwise().sum().array();
  return to_tensor(p);
}

struct ClassifierExtractor::Impl {
  std::unique_ptr<TrainState> state;
};

ClassifierExtractor::ClassifierExtractor(const std::string& checkpoint) : impl_(std::make_unique<Impl>()) {
  impl_->state = load_checkpoint(checkpoint);
  if (!impl_->state->clustering) {
    throw MetricError("classifier feature extractor: checkpoint " + checkpoint + " has no clustering network");
  }
}

ClassifierExtractor::~ClassifierExtractor() = default;

Tensor ClassifierExtractor::features(const Tensor& x) {
  NoGradGuard no_grad;
  auto& net = *impl_->state->clustering;
  std::vector<double> out;
  const std::size_t n = x.dim(0);
  const std::size_t per = x.numel() / n;
  constexpr std::size_t kChunk = 512;
  for (std::size_t b = 0; b < n; b += kChunk) {
    const std::size_t e = std::min(n, b + kChunk);
    Shape shape = x.shape();
    shape[0] = e - b;
    Tensor part = Tensor::from(shape, std::vector<double>(x.data().begin() + static_cast<std::ptrdiff_t>(b * per),
                                                          x.data().begin() + static_cast<std::ptrdiff_t>(e * per)));
    Tensor f = net.features(part, false);
    out.insert(out.end(), f.data().begin(), f.data().end());
  }
  const std::size_t width = out.size() / n;
  return Tensor::from({n, width}, std::move(out));
}

Tensor ClassifierExtractor::class_probabilities(const Tensor& x) {
  return cluster_probabilities(*impl_->state->clustering, x);
}

std::unique_ptr<FeatureExtractor> make_feature_extractor(const EvalConfig& eval, const Shape& sample_shape) {
  const std::string& kind = eval.feature_extractor;
  if (kind == "none") return nullptr;
  if (kind == "identity") return std::make_unique<IdentityExtractor>();
  if (kind == "random_projection") {
    return std::make_unique<RandomProjectionExtractor>(shape_numel(sample_shape), eval.feature_dim,
                                                       eval.feature_classes, eval.feature_seed);
  }
  const std::string prefix = "classifier:";
  if (kind.rfind(prefix, 0) == 0) return std::make_unique<ClassifierExtractor>(kind.substr(prefix.size()));
  throw ConfigError("eval.feature_extractor: unknown extractor '" + kind + "'");
}

// --------------------------------------------------------------- reporting

std::string Report::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : scalars) j[k] = v;
  for (const auto& [k, v] : vectors) j[k] = v;
  return j.dump(2) + "\n";
}

std::string Report::to_csv() const {
  std::ostringstream os;
  os << "metric,value\n";
  for (const auto& [k, v] : scalars) os << k << ',' << fmt(v) << '\n';
  for (const auto& [k, vec] : vectors) {
    for (std::size_t i = 0; i < vec.size(); ++i) os << k << '[' << i << "]," << fmt(vec[i]) << '\n';
  }
  return os.str();
}

}  // namespace slcgan::metrics
