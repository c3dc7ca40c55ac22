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


// Python bindings: training, evaluation and generation entry points plus the
// standalone metrics. Arrays cross the boundary as float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "slcgan/checkpoint.hpp"
#include "slcgan/commands.hpp"
#include "slcgan/errors.hpp"
#include "slcgan/metrics.hpp"
#include "slcgan/trainer.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace slcgan {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() == 0) throw ConfigError("expected an array with a leading sample axis");
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor::from(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const metrics::Report& r) {
  py::dict d;
  for (const auto& [k, v] : r.scalars) d[py::str(k)] = v;
  for (const auto& [k, v] : r.vectors) d[py::str(k)] = v;
  return d;
}

TrainMode parse_mode(const std::string& mode) {
  if (mode == "ugan") return TrainMode::ugan;
  if (mode == "cgan") return TrainMode::cgan;
  if (mode == "slcgan") return TrainMode::slcgan;
  throw ConfigError("mode: expected ugan, cgan or slcgan, got '" + mode + "'");
}

// Draws n samples; returns (samples, cluster ids). Ids are empty for
// unconditional generators.
py::tuple generate_samples(const std::filesystem::path& checkpoint, std::size_t n, std::uint64_t seed,
                           std::optional<int> cluster) {
  auto state = load_checkpoint(checkpoint);
  const ArchConfig& arch = state->generator.arch();
  if (cluster && !arch.conditional) throw ConfigError("cluster: generator is unconditional");
  Rng rng(seed);
  LatentCode z = sample_latent(n, arch.latent_dim, rng);
  std::optional<ConditioningCode> c;
  std::vector<int> ids;
  if (arch.conditional) {
    if (cluster && (*cluster < 0 || static_cast<std::size_t>(*cluster) >= arch.num_clusters)) {
      throw ConfigError("cluster: id " + std::to_string(*cluster) + " outside [0, " +
                        std::to_string(arch.num_clusters) + ")");
    }
    c = cluster ? make_condition(std::vector<int>(n, *cluster), arch.num_clusters)
                : sample_condition(n, arch.num_clusters, rng);
    ids = c->index;
  }
  return py::make_tuple(to_array(generate(state->generator, z, c)), ids);
}

}  // namespace
}  // namespace slcgan

PYBIND11_MODULE(_slcgan, m) {
  using namespace slcgan;
  m.doc() = "Conditional GAN training on pseudo-labels from a jointly trained clustering network";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
  py::register_exception<IngestionError>(m, "IngestionError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // ---- configs
  m.def("ring_config", [](const std::string& mode, std::uint64_t seed) {
    return gmm_ring_config(parse_mode(mode), seed).to_text();
  }, "mode"_a, "seed"_a = 0, "Resolved config text for the 8-mode ring benchmark.");
  m.def("resolve_config", [](const std::string& text) {
    RunConfig c = RunConfig::parse(text);
    c.resolve();
    c.validate();
    return c.to_text();
  }, "text"_a, "Parses, validates and returns the fully resolved config text.");

  // ---- commands
  m.def("train", [](const std::string& config_text, std::optional<std::filesystem::path> resume) {
    RunConfig c = RunConfig::parse(config_text);
    py::gil_scoped_release release;
    return train_run(std::move(c), resume);
  }, "config"_a, "resume"_a = py::none(), "Trains from config text; returns the run directory.");
  m.def("evaluate", [](const std::filesystem::path& checkpoint, std::vector<std::string> names,
                       std::optional<std::filesystem::path> out, std::optional<std::filesystem::path> config,
                       std::uint64_t seed) {
    EvalOptions o;
    o.checkpoint = checkpoint;
    o.metrics = std::move(names);
    o.out = std::move(out);
    o.config = std::move(config);
    o.seed = seed;
    return report_dict(cmd_eval(o));
  }, "checkpoint"_a, "metrics"_a, "out"_a = py::none(), "config"_a = py::none(), "seed"_a = 0);
  m.def("sample", [](const std::filesystem::path& checkpoint, std::size_t rows, std::size_t cols,
                     std::optional<std::filesystem::path> out, std::uint64_t seed) {
    return cmd_sample({checkpoint, rows, cols, std::move(out), seed});
  }, "checkpoint"_a, "rows"_a = 0, "cols"_a = 8, "out"_a = py::none(), "seed"_a = 0,
        "Writes a sample grid and returns its path.");
  m.def("resample", [](const std::filesystem::path& checkpoint, const std::filesystem::path& input, std::size_t n,
                       std::optional<std::filesystem::path> out, std::uint64_t seed) {
    ResampleResult r = cmd_resample({checkpoint, input, n, std::move(out), seed});
    return py::dict("cluster"_a = r.cluster, "confidence"_a = r.confidence, "strip"_a = r.strip,
                    "sidecar"_a = r.sidecar);
  }, "checkpoint"_a, "input"_a, "n"_a = 10, "out"_a = py::none(), "seed"_a = 0);
  m.def("generate", &generate_samples, "checkpoint"_a, "n"_a, "seed"_a = 0, "cluster"_a = py::none(),
        "Returns (samples, cluster ids) drawn from a checkpoint's generator.");
  m.def("cluster_probabilities", [](const std::filesystem::path& checkpoint, const Array& x) {
    auto state = load_checkpoint(checkpoint);
    if (!state->clustering) throw ConfigError("checkpoint has no clustering network");
    return to_array(cluster_probabilities(*state->clustering, to_tensor(x)));
  }, "checkpoint"_a, "x"_a);

  // ---- metrics
  m.def("frechet_distance", [](const Array& a, const Array& b) {
    return metrics::frechet_distance(metrics::gaussian_stats(to_tensor(a)), metrics::gaussian_stats(to_tensor(b)));
  }, "features_a"_a, "features_b"_a);
  m.def("inception_style_score", [](const Array& probs, std::size_t splits) {
    return metrics::inception_style_score(to_tensor(probs), splits);
  }, "probs"_a, "splits"_a = 1, "Returns (mean, std) over splits.");
  m.def("clustering_accuracy", [](const std::vector<int>& clusters, const std::vector<int>& labels,
                                  std::size_t num_clusters, std::size_t num_classes) {
    return metrics::clustering_accuracy(metrics::contingency(clusters, labels, num_clusters, num_classes));
  }, "clusters"_a, "labels"_a, "num_clusters"_a, "num_classes"_a);
  m.def("purity", [](const std::vector<int>& clusters, const std::vector<int>& labels, std::size_t num_clusters,
                     std::size_t num_classes) {
    return metrics::purity(metrics::contingency(clusters, labels, num_clusters, num_classes));
  }, "clusters"_a, "labels"_a, "num_clusters"_a, "num_classes"_a);
  m.def("kmeans", [](const Array& features, std::size_t k, std::uint64_t seed) {
    metrics::KMeansResult r = metrics::kmeans(to_tensor(features), k, seed);
    return py::make_tuple(r.assignments, r.inertia);
  }, "features"_a, "k"_a, "seed"_a = 0, "Returns (assignments, inertia).");
  m.def("mode_coverage", [](const Array& points, std::size_t modes, double radius, double sigma,
                            std::optional<std::vector<int>> clusters, std::size_t num_clusters) {
    auto cov = metrics::mode_coverage(to_tensor(points), GaussianMixtureSpec::ring(modes, radius, sigma), clusters,
                                      num_clusters);
    py::dict d("covered"_a = cov.covered, "per_mode"_a = cov.per_mode, "high_quality"_a = cov.high_quality);
    d["purity"] = cov.purity ? py::cast(*cov.purity) : py::none();
    return d;
  }, "points"_a, "modes"_a = 8, "radius"_a = 1.0, "sigma"_a = 0.05, "clusters"_a = py::none(),
        "num_clusters"_a = 0, "Coverage of a ring mixture by 2D points.");
}
