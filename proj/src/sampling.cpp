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

#include "slcgan/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "slcgan/errors.hpp"
#include "slcgan/image_io.hpp"

namespace slcgan {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ priors

LatentCode sample_latent(std::size_t n, std::size_t latent_dim, Rng& rng) {
  if (n == 0 || latent_dim == 0) throw ConfigError("sample_latent: n and latent_dim must be positive");
  std::vector<double> values(n * latent_dim);
  for (auto& v : values) v = rng.normal();
  return {Tensor::from({n, latent_dim}, std::move(values))};
}

ConditioningCode make_condition(std::vector<int> index, std::size_t num_clusters) {
  const std::size_t n = index.size();
  std::vector<double> onehot(n * num_clusters, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= num_clusters) {
      throw ConfigError("conditioning index " + std::to_string(index[i]) + " outside [0, " +
                        std::to_string(num_clusters) + ")");
    }
    onehot[i * num_clusters + static_cast<std::size_t>(index[i])] = 1.0;
  }
  return {std::move(index), Tensor::from({n, num_clusters}, std::move(onehot))};
}

ConditioningCode sample_condition(std::size_t n, std::size_t num_clusters, Rng& rng) {
  if (num_clusters == 0) throw ConfigError("sample_condition: K must be positive");
  std::vector<int> index(n);
  for (auto& c : index) c = static_cast<int>(rng.index(num_clusters));
  return make_condition(std::move(index), num_clusters);
}

// ------------------------------------------------------------ augmentation

AugmentationPolicy AugmentationPolicy::identity() {
  AugmentationPolicy p;
  p.crop_low = 1.0;
  p.crop_high = 1.0;
  p.jitter = 0.0;
  p.hflip_prob = 0.0;
  p.point_noise = 0.0;
  return p;
}

void AugmentationPolicy::validate() const {
  if (!(crop_low > 0.0 && crop_low <= crop_high && crop_high <= 1.0)) {
    throw ConfigError("aug.crop: need 0 < crop_low <= crop_high <= 1");
  }
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("aug.jitter: must be in [0, 1)");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) throw ConfigError("aug.hflip_prob: must be in [0, 1]");
  if (!(point_noise >= 0.0)) throw ConfigError("aug.point_noise: must be non-negative");
}

namespace {

// Bilinear resize of one plane (half-pixel centers).
void resize_plane(const double* src, std::size_t sy0, std::size_t sx0, std::size_t ch, std::size_t cw,
                  std::size_t src_stride, double* dst, std::size_t dh, std::size_t dw) {
  const double ry = static_cast<double>(ch) / static_cast<double>(dh);
  const double rx = static_cast<double>(cw) / static_cast<double>(dw);
  for (std::size_t y = 0; y < dh; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * ry - 0.5, 0.0, static_cast<double>(ch - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, ch - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < dw; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * rx - 0.5, 0.0, static_cast<double>(cw - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, cw - 1);
      const double wx = fx - static_cast<double>(x0);
      auto at = [&](std::size_t yy, std::size_t xx) { return src[(sy0 + yy) * src_stride + sx0 + xx]; };
      dst[y * dw + x] = (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x1)) +
                        wy * ((1 - wx) * at(y1, x0) + wx * at(y1, x1));
    }
  }
}

void augment_image(double* img, std::size_t c, std::size_t h, std::size_t w,
                   const AugmentationPolicy& policy, Rng& rng) {
  const std::size_t area = h * w;
  // Crop.
  const double keep = policy.crop_low == policy.crop_high ? policy.crop_low
                                                          : rng.uniform(policy.crop_low, policy.crop_high);
  const double side = std::sqrt(keep);
  const auto ch = static_cast<std::size_t>(std::lround(side * static_cast<double>(h)));
  const auto cw = static_cast<std::size_t>(std::lround(side * static_cast<double>(w)));
  if (ch < 1 || cw < 1) throw ConfigError("augment: crop window smaller than one pixel");
  if (ch != h || cw != w) {
    const std::size_t y0 = rng.index(h - ch + 1);
    const std::size_t x0 = rng.index(w - cw + 1);
    std::vector<double> plane(area);
    for (std::size_t k = 0; k < c; ++k) {
      resize_plane(img + k * area, y0, x0, ch, cw, w, plane.data(), h, w);
      std::copy(plane.begin(), plane.end(), img + k * area);
    }
  }
  // Color jitter in [0, 1] space.
  if (policy.jitter > 0.0) {
    const double lo = 1.0 - policy.jitter, hi = 1.0 + policy.jitter;
    const double brightness = rng.uniform(lo, hi);
    const double contrast = rng.uniform(lo, hi);
    const double saturation = rng.uniform(lo, hi);
    std::vector<double> v(c * area);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (img[i] + 1.0) * 0.5 * brightness;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (auto& x : v) x = (x - mean) * contrast + mean;
    if (c == 3) {
      for (std::size_t i = 0; i < area; ++i) {
        const double gray = 0.299 * v[i] + 0.587 * v[area + i] + 0.114 * v[2 * area + i];
        for (std::size_t k = 0; k < 3; ++k) v[k * area + i] = (v[k * area + i] - gray) * saturation + gray;
      }
    }
    for (std::size_t i = 0; i < v.size(); ++i) img[i] = std::clamp(v[i], 0.0, 1.0) * 2.0 - 1.0;
  }
  // Horizontal flip.
  if (rng.bernoulli(policy.hflip_prob)) {
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t y = 0; y < h; ++y) {
        double* row = img + k * area + y * w;
        std::reverse(row, row + w);
      }
    }
  }
  for (std::size_t i = 0; i < c * area; ++i) img[i] = std::clamp(img[i], -1.0, 1.0);
}

}  // namespace

Tensor augment(const Tensor& x, const AugmentationPolicy& policy, Rng& rng) {
  policy.validate();
  std::vector<double> out(x.data().begin(), x.data().end());
  if (x.rank() == 2) {
    if (policy.point_noise > 0.0) {
      for (auto& v : out) v += policy.point_noise * rng.normal();
    }
    return Tensor::from(x.shape(), std::move(out));
  }
  if (x.rank() != 4) throw ConfigError("augment: expected [N, D] points or [N, C, H, W] images");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  for (std::size_t s = 0; s < n; ++s) augment_image(out.data() + s * c * h * w, c, h, w, policy, rng);
  return Tensor::from(x.shape(), std::move(out));
}

// ----------------------------------------------------------- toy mixtures

GaussianMixtureSpec GaussianMixtureSpec::ring(std::size_t count, double radius, double sigma) {
  GaussianMixtureSpec spec;
  spec.sigma = sigma;
  const double two_pi = 2.0 * std::acos(-1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double angle = two_pi * static_cast<double>(i) / static_cast<double>(count);
    spec.centers.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  spec.weights.assign(count, 1.0 / static_cast<double>(count));
  return spec;
}

void GaussianMixtureSpec::validate() const {
  if (centers.size() < 2) throw ConfigError("data.gmm: at least two centers are required");
  if (!(sigma > 0.0)) throw ConfigError("data.gmm.sigma: must be positive");
  if (weights.size() != centers.size()) {
    throw ConfigError("data.gmm.weights: expected " + std::to_string(centers.size()) + " weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("data.gmm.weights: weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("data.gmm.weights: weights must sum to 1");
}

PointSample gmm_sample(const GaussianMixtureSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  std::vector<double> cumulative(spec.weights.size());
  std::partial_sum(spec.weights.begin(), spec.weights.end(), cumulative.begin());
  PointSample out;
  std::vector<double> points(n * 2);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto k = static_cast<std::size_t>(it - cumulative.begin());
    k = std::min(k, cumulative.size() - 1);
    out.labels[i] = static_cast<int>(k);
    points[2 * i] = spec.centers[k][0] + spec.sigma * rng.normal();
    points[2 * i + 1] = spec.centers[k][1] + spec.sigma * rng.normal();
  }
  out.points = Tensor::from({n, 2}, std::move(points));
  return out;
}

// ---------------------------------------------------------------- datasets

Dataset::Dataset(Shape sample_shape, std::vector<double> values, std::optional<std::vector<int>> labels,
                 std::vector<std::string> class_names)
    : sample_shape_(std::move(sample_shape)),
      sample_numel_(shape_numel(sample_shape_)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)) {
  if (sample_numel_ == 0 || values_.size() % sample_numel_ != 0) {
    throw IngestionError("dataset values do not divide into samples of shape " + shape_string(sample_shape_));
  }
  size_ = values_.size() / sample_numel_;
  if (labels_ && labels_->size() != size_) throw IngestionError("dataset label count does not match sample count");
  if (labels_) {
    for (int y : *labels_) {
      if (y < 0 || static_cast<std::size_t>(y) >= class_names_.size()) {
        throw IngestionError("dataset label " + std::to_string(y) + " has no class name");
      }
    }
  }
}

Dataset Dataset::from_gmm(const GaussianMixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PointSample sample = gmm_sample(spec, n, rng);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.centers.size(); ++i) names.push_back("mode" + std::to_string(i));
  return Dataset({2}, std::vector<double>(sample.points.data().begin(), sample.points.data().end()),
                 std::move(sample.labels), std::move(names));
}

Dataset Dataset::from_image_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IngestionError("image directory not found: " + dir.string());

  std::vector<fs::path> subdirs, flat;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
    else if (is_image_file(entry.path())) flat.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::sort(flat.begin(), flat.end());

  std::vector<std::pair<fs::path, int>> files;
  std::vector<std::string> names;
  const bool labeled = !subdirs.empty();
  if (labeled) {
    for (const auto& sub : subdirs) {
      std::vector<fs::path> members;
      for (const auto& entry : fs::directory_iterator(sub)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) members.push_back(entry.path());
      }
      std::sort(members.begin(), members.end());
      const int label = static_cast<int>(names.size());
      names.push_back(sub.filename().string());
      for (auto& m : members) files.emplace_back(m, label);
    }
  } else {
    for (auto& f : flat) files.emplace_back(f, -1);
  }
  if (files.empty()) throw IngestionError("no images found under " + dir.string());

  Shape shape;
  std::vector<double> values;
  std::vector<int> labels;
  for (const auto& [path, label] : files) {
    DecodedImage img = read_image(path);
    const Shape this_shape{img.channels, img.height, img.width};
    if (shape.empty()) {
      shape = this_shape;
      values.reserve(files.size() * shape_numel(shape));
    } else if (this_shape != shape) {
      throw IngestionError("inconsistent image size " + shape_string(this_shape) + " in " + path.string() +
                           ", expected " + shape_string(shape));
    }
    for (double v : img.values) values.push_back(v * 2.0 - 1.0);
    labels.push_back(label);
  }
  std::optional<std::vector<int>> maybe_labels;
  if (labeled) maybe_labels = std::move(labels);
  return Dataset(shape, std::move(values), std::move(maybe_labels), std::move(names));
}

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset Dataset::from_mnist(const fs::path& dir, std::size_t limit) {
  const fs::path image_path = dir / "train-images-idx3-ubyte";
  const fs::path label_path = dir / "train-labels-idx1-ubyte";
  auto images = read_file(image_path);
  auto label_bytes = read_file(label_path);
  if (images.size() < 16 || be32(images, 0) != 2051) throw IngestionError("not an IDX image file: " + image_path.string());
  if (label_bytes.size() < 8 || be32(label_bytes, 0) != 2049) {
    throw IngestionError("not an IDX label file: " + label_path.string());
  }
  std::size_t count = be32(images, 4);
  const std::size_t rows = be32(images, 8), cols = be32(images, 12);
  if (rows != 28 || cols != 28) throw IngestionError("expected 28x28 digits in " + image_path.string());
  if (be32(label_bytes, 4) != count) throw IngestionError("MNIST image and label counts differ");
  if (images.size() < 16 + count * 784 || label_bytes.size() < 8 + count) {
    throw IngestionError("truncated MNIST file under " + dir.string());
  }
  if (limit > 0) count = std::min(count, limit);
  std::vector<double> values(count * 32 * 32, -1.0);
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t y = 0; y < 28; ++y) {
      for (std::size_t x = 0; x < 28; ++x) {
        const double v = images[16 + i * 784 + y * 28 + x] / 255.0;
        values[i * 1024 + (y + 2) * 32 + x + 2] = v * 2.0 - 1.0;
      }
    }
    labels[i] = label_bytes[8 + i];
  }
  std::vector<std::string> names;
  for (int d = 0; d < 10; ++d) names.push_back(std::to_string(d));
  return Dataset({1, 32, 32}, std::move(values), std::move(labels), std::move(names));
}

Dataset Dataset::from_cifar10(const fs::path& dir, std::size_t limit) {
  constexpr std::size_t kRecord = 1 + 3072;
  std::vector<double> values;
  std::vector<int> labels;
  for (int b = 1; b <= 5; ++b) {
    const fs::path path = dir / ("data_batch_" + std::to_string(b) + ".bin");
    auto bytes = read_file(path);
    if (bytes.size() % kRecord != 0) throw IngestionError("truncated CIFAR-10 batch " + path.string());
    for (std::size_t off = 0; off < bytes.size(); off += kRecord) {
      if (limit > 0 && labels.size() >= limit) break;
      labels.push_back(bytes[off]);
      for (std::size_t i = 0; i < 3072; ++i) values.push_back(bytes[off + 1 + i] / 255.0 * 2.0 - 1.0);
    }
    if (limit > 0 && labels.size() >= limit) break;
  }
  std::vector<std::string> names = {"airplane", "automobile", "bird", "cat", "deer",
                                    "dog", "frog", "horse", "ship", "truck"};
  return Dataset({3, 32, 32}, std::move(values), std::move(labels), std::move(names));
}

const std::vector<int>& Dataset::labels() const {
  if (!labels_) throw MetricError("dataset has no ground-truth labels");
  return *labels_;
}

Tensor Dataset::gather(const std::vector<std::size_t>& indices) const {
  std::vector<double> out(indices.size() * sample_numel_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size_) throw ConfigError("dataset index out of range");
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(indices[i] * sample_numel_), sample_numel_,
                out.begin() + static_cast<std::ptrdiff_t>(i * sample_numel_));
  }
  Shape shape{indices.size()};
  shape.insert(shape.end(), sample_shape_.begin(), sample_shape_.end());
  return Tensor::from(std::move(shape), std::move(out));
}

Tensor Dataset::slice(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return gather(idx);
}

// ------------------------------------------------------------ iteration

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, bool prefetch)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed), prefetch_(prefetch) {
  if (batch_size == 0) throw ConfigError("train.batch_size: must be positive");
  batches_per_epoch_ = dataset.size() / batch_size;
  if (batches_per_epoch_ == 0) {
    throw ConfigError("train.batch_size: " + std::to_string(batch_size) + " exceeds dataset size " +
                      std::to_string(dataset.size()));
  }
}

BatchIterator::~BatchIterator() {
  if (pending_ && pending_->valid()) pending_->wait();
}

BatchIterator::Position BatchIterator::advance(Position p, std::size_t per_epoch) {
  if (++p.cursor == per_epoch) {
    p.cursor = 0;
    ++p.epoch;
  }
  return p;
}

namespace {

Batch load_batch(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                 BatchIterator::Position p) {
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(derive_seed(seed, p.epoch));
  std::shuffle(order.begin(), order.end(), shuffle.engine());
  std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(p.cursor * batch_size),
                               order.begin() + static_cast<std::ptrdiff_t>((p.cursor + 1) * batch_size));
  Batch batch;
  batch.x = dataset.gather(idx);
  if (dataset.has_labels()) {
    std::vector<int> y;
    y.reserve(idx.size());
    for (auto i : idx) y.push_back(dataset.labels()[i]);
    batch.labels = std::move(y);
  }
  return batch;
}

}  // namespace

Batch BatchIterator::load(Position p) const { return load_batch(*dataset_, batch_size_, seed_, p); }

Batch BatchIterator::next() {
  Batch batch = (pending_ && pending_->valid()) ? pending_->get() : load(position_);
  position_ = advance(position_, batches_per_epoch_);
  pending_.reset();
  if (prefetch_) {
    pending_ = std::async(std::launch::async, [ds = dataset_, bs = batch_size_, seed = seed_, p = position_] {
      return load_batch(*ds, bs, seed, p);
    });
  }
  return batch;
}

void BatchIterator::seek(Position position) {
  if (pending_ && pending_->valid()) pending_->wait();
  pending_.reset();
  if (position.cursor >= batches_per_epoch_) throw CheckpointError("batch cursor beyond epoch length");
  position_ = position;
}

BatchIterator load_dataset(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, bool prefetch) {
  return BatchIterator(dataset, batch_size, seed, prefetch);
}

}  // namespace slcgan
