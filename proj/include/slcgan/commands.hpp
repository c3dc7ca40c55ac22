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

#ifndef SLCGAN_COMMANDS_HPP_
#define SLCGAN_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slcgan/config.hpp"
#include "slcgan/image_io.hpp"
#include "slcgan/metrics.hpp"
#include "slcgan/sampling.hpp"
#include "slcgan/trainer.hpp"

// Library side of the command-line tool. Every command is a plain function so
// tests and the Python module can drive it without a subprocess.
//
// Run directory layout:
//   config.resolved  metrics.csv  checkpoints/  samples/  clusters/  eval/
namespace slcgan {

// Directory holding `data.path` when it is relative or empty.
inline constexpr const char* kDataRootEnv = "SLCGAN_DATA_ROOT";

// Loads the dataset a config describes, honoring the data-root fallback.
Dataset load_run_dataset(const RunConfig& config);

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<bool> deterministic;
  // Continue from this checkpoint instead of a fresh initialization.
  std::optional<std::filesystem::path> resume;
  bool quiet = true;
};

// Trains to train.iterations and returns the run directory.
std::filesystem::path cmd_train(const TrainOptions& options);
// Same, from an in-memory config.
std::filesystem::path train_run(RunConfig config, const std::optional<std::filesystem::path>& resume = std::nullopt,
                                bool quiet = true);

struct EvalOptions {
  std::filesystem::path checkpoint;
  // fid, is, accuracy, purity, histogram, kmeans, probe, mode_coverage.
  std::vector<std::string> metrics;
  std::optional<std::filesystem::path> out;
  // Overrides the data and eval sections of the checkpoint's config.
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 0;
};

// Writes report.json and report.csv under <out>/eval and returns the report.
metrics::Report cmd_eval(const EvalOptions& options);

struct SampleOptions {
  std::filesystem::path checkpoint;
  std::size_t rows = 0;  // 0 = every cluster (8 rows for unconditional models)
  std::size_t cols = 8;
  std::optional<std::filesystem::path> out;
  std::uint64_t seed = 0;
};

// One row per cluster id, one column per latent draw. Image models write
// grid.png; point models write grid.csv and a scatter plot. Returns the main
// output file.
std::filesystem::path cmd_sample(const SampleOptions& options);

struct ResampleOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::size_t n = 10;
  std::optional<std::filesystem::path> out;
  std::uint64_t seed = 0;
};

struct ResampleResult {
  int cluster = 0;
  double confidence = 0.0;
  std::filesystem::path strip;
  std::filesystem::path sidecar;
};

// Labels `input` with C, then generates n samples from that cluster.
ResampleResult cmd_resample(const ResampleOptions& options);

struct ClusterExportOptions {
  std::filesystem::path checkpoint;
  std::vector<int> clusters;  // empty = all
  std::size_t top_n = 8;
  std::size_t pool = 40;  // generated candidates per cluster
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 0;
};

struct ClusterPanel {
  int cluster = 0;
  std::vector<double> real_confidence;  // non-increasing
  std::vector<double> fake_confidence;  // non-increasing
  bool skipped = false;
};

std::vector<ClusterPanel> cmd_cluster_export(const ClusterExportOptions& options);

// Renders 2D points as a square scatter plot; colors follow `groups`.
Raster scatter_plot(const Tensor& points, const std::vector<int>& groups, std::size_t size = 256,
                    double extent = 1.6);

}  // namespace slcgan

#endif  // SLCGAN_COMMANDS_HPP_
