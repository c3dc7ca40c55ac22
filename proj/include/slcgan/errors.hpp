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

#ifndef SLCGAN_ERRORS_HPP_
#define SLCGAN_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace slcgan {

// Bad shapes, bad config values, unknown keys. CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values in parameters or losses. CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::int64_t iteration)
      : NumericError(what), iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

// Unreadable or malformed dataset sources.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Truncated, corrupted or version-mismatched checkpoint files.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric cannot be computed from the given inputs.
class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace slcgan

#endif  // SLCGAN_ERRORS_HPP_
