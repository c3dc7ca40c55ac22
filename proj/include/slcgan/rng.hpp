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

#ifndef SLCGAN_RNG_HPP_
#define SLCGAN_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

namespace slcgan {

// Seeded 64-bit Mersenne twister plus a cached normal sampler. The full
// state, including the normal sampler's spare value, round-trips through
// serialize()/deserialize().
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  double normal();
  // [0, 1)
  double uniform();
  double uniform(double low, double high);
  // [0, n)
  std::size_t index(std::size_t n);
  bool bernoulli(double p);
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  std::string serialize() const;
  void deserialize(const std::string& state);

  bool operator==(const Rng& other) const;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Derives an independent stream seed from (seed, tag).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace slcgan

#endif  // SLCGAN_RNG_HPP_
