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


#ifndef SLCGAN_TESTS_METRIC_ORACLES_HPP_
#define SLCGAN_TESTS_METRIC_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

// Reference evaluations for cluster and distribution metrics, written from the
// definitions without the library's algorithms.
namespace slcgan::oracle {

// Best injective cluster -> class matching by exhaustive search, as a fraction
// of the table total. counts is row-major [clusters][classes].
inline double brute_force_accuracy(const std::vector<std::uint64_t>& counts, std::size_t clusters,
                                   std::size_t classes) {
  std::vector<std::size_t> perm(classes);
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t best = 0, total = 0;
  for (auto c : counts) total += c;
  do {
    // The first `clusters` entries of each class permutation give one injective map.
    std::uint64_t matched = 0;
    for (std::size_t k = 0; k < clusters; ++k) matched += counts[k * classes + perm[k]];
    best = std::max(best, matched);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total == 0 ? 0.0 : static_cast<double>(best) / static_cast<double>(total);
}

inline double direct_purity(const std::vector<std::uint64_t>& counts, std::size_t clusters, std::size_t classes) {
  std::uint64_t majority = 0, total = 0;
  for (std::size_t k = 0; k < clusters; ++k) {
    std::uint64_t row_max = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      row_max = std::max(row_max, counts[k * classes + j]);
      total += counts[k * classes + j];
    }
    majority += row_max;
  }
  return total == 0 ? 0.0 : static_cast<double>(majority) / static_cast<double>(total);
}

// Frechet distance between Gaussians with diagonal (hence commuting)
// covariances: |m_a - m_b|^2 + sum_i (a_i + b_i - 2 sqrt(a_i b_i)).
inline double diagonal_frechet(const std::vector<double>& mean_a, const std::vector<double>& var_a,
                               const std::vector<double>& mean_b, const std::vector<double>& var_b) {
  double d = 0.0;
  for (std::size_t i = 0; i < mean_a.size(); ++i) {
    d += (mean_a[i] - mean_b[i]) * (mean_a[i] - mean_b[i]);
    d += var_a[i] + var_b[i] - 2.0 * std::sqrt(var_a[i] * var_b[i]);
  }
  return d;
}

}  // namespace slcgan::oracle

#endif  // SLCGAN_TESTS_METRIC_ORACLES_HPP_
