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

#ifndef SLCGAN_TESTS_TEST_UTIL_HPP_
#define SLCGAN_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "slcgan/config.hpp"
#include "slcgan/layers.hpp"
#include "slcgan/tensor.hpp"

namespace slcgan::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(gen);
  return Tensor::from(std::move(shape), std::move(values));
}

// Rows of random probabilities (softmax of Gaussian logits).
inline Tensor random_probs(std::size_t n, std::size_t k, std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, 1.5);
  std::vector<double> values(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += values[i * k + j] = std::exp(dist(gen));
    for (std::size_t j = 0; j < k; ++j) values[i * k + j] /= total;
  }
  return Tensor::from({n, k}, std::move(values));
}

inline Tensor random_onehot(std::size_t n, std::size_t k, std::mt19937_64& gen) {
  std::vector<double> values(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) values[i * k + gen() % k] = 1.0;
  return Tensor::from({n, k}, std::move(values));
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::string worst;  // "<param>[<index>]"
  std::size_t checked = 0;
};

// Compares gradients left in `params` by one call of `objective` against
// central differences of its return value. Each element's error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradCheck check_gradients(ParamSet& params, const std::function<double()>& objective,
                                 double step = 1e-5, double floor = 1e-6) {
  for (auto& p : params.params) p.tensor.zero_grad();
  objective();
  std::vector<std::vector<double>> analytic;
  for (auto& p : params.params) {
    if (p.tensor.has_grad()) {
      analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    } else {
      analytic.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  GradCheck result;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < params.params.size(); ++i) {
    auto values = params.params[i].tensor.mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double original = values[j];
      values[j] = original + step;
      const double up = objective();
      values[j] = original - step;
      const double down = objective();
      values[j] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i][j];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = params.params[i].name + "[" + std::to_string(j) + "]";
      }
      ++result.checked;
    }
  }
  return result;
}

// mlp-family networks small enough for exhaustive finite differences.
inline RunConfig tiny_config(TrainMode mode, std::uint64_t seed, std::size_t clusters = 3) {
  RunConfig c = gmm_ring_config(mode, seed);
  c.train.num_clusters = clusters;
  c.train.batch_size = 16;
  c.train.iterations = 20;
  c.arch.latent_dim = 3;
  c.arch.embed_dim = 4;
  c.arch.hidden = 8;
  c.arch.c_hidden = 8;
  c.arch.penultimate = 6;
  c.data.size = 256;
  c.resolve();
  c.validate();
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Fresh empty directory under the system temp dir, unique per test binary.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("slcgan_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace slcgan::testing

#endif  // SLCGAN_TESTS_TEST_UTIL_HPP_
