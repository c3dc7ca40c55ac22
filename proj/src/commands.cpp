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

#include "slcgan/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "slcgan/checkpoint.hpp"
#include "slcgan/errors.hpp"

namespace fs = std::filesystem;

namespace slcgan {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// <run>/checkpoints/x.ck -> <run>; anything else -> its directory.
fs::path run_dir_of(const fs::path& checkpoint) {
  const fs::path parent = checkpoint.parent_path();
  if (parent.filename() == "checkpoints") return parent.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

bool is_points(const ArchConfig& arch) { return arch.family == Family::mlp; }

struct Generated {
  Tensor x;
  std::vector<int> codes;  // empty for unconditional generators
};

// Draws n samples in inference mode, chunked to bound memory.
Generated generate_many(Generator& g, std::size_t n, Rng& rng, const std::optional<int>& fixed_cluster = std::nullopt) {
  const ArchConfig& arch = g.arch();
  const std::size_t chunk = arch.family == Family::mlp ? 4096 : 128;
  Generated out;
  std::vector<double> values;
  Shape shape;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t m = std::min(chunk, n - begin);
    LatentCode z = sample_latent(m, arch.latent_dim, rng);
    std::optional<ConditioningCode> c;
    if (arch.conditional) {
      c = fixed_cluster ? make_condition(std::vector<int>(m, *fixed_cluster), arch.num_clusters)
                        : sample_condition(m, arch.num_clusters, rng);
      out.codes.insert(out.codes.end(), c->index.begin(), c->index.end());
    }
    Tensor x = generate(g, z, c);
    shape = x.shape();
    values.insert(values.end(), x.data().begin(), x.data().end());
  }
  shape[0] = n;
  out.x = Tensor::from(shape, std::move(values));
  return out;
}

// Rows of `x` selected by `indices`.
Tensor select_rows(const Tensor& x, const std::vector<std::size_t>& indices) {
  const std::size_t per = x.numel() / x.dim(0);
  std::vector<double> values;
  values.reserve(indices.size() * per);
  for (auto i : indices) {
    values.insert(values.end(), x.data().begin() + static_cast<std::ptrdiff_t>(i * per),
                  x.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
  }
  Shape shape = x.shape();
  shape[0] = indices.size();
  return Tensor::from(shape, std::move(values));
}

std::vector<int> argmax_rows(const Tensor& probs) {
  const std::size_t n = probs.dim(0);
  const std::size_t k = probs.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probs.data().subspan(i * k, k);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tensor subsample(const Dataset& data, std::size_t n, std::uint64_t seed, std::vector<std::size_t>* chosen = nullptr) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (n < data.size()) {
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  if (chosen) *chosen = idx;
  return data.gather(idx);
}

void write_points_csv(const fs::path& path, const Tensor& points, const std::vector<int>& groups,
                      const std::string& group_name) {
  std::ostringstream os;
  os << "x,y," << group_name << "\n";
  for (std::size_t i = 0; i < points.dim(0); ++i) {
    os << fmt(points.at(2 * i)) << ',' << fmt(points.at(2 * i + 1)) << ',' << (groups.empty() ? -1 : groups[i]) << '\n';
  }
  write_text(path, os.str());
}

// Writes a grid of generated samples: one row per cluster code.
void write_sample_grid(Generator& g, std::size_t rows, std::size_t cols, Rng& rng, const fs::path& stem) {
  const ArchConfig& arch = g.arch();
  std::vector<double> values;
  std::vector<int> groups;
  Shape shape;
  for (std::size_t r = 0; r < rows; ++r) {
    LatentCode z = sample_latent(cols, arch.latent_dim, rng);
    std::optional<ConditioningCode> c;
    if (arch.conditional) c = make_condition(std::vector<int>(cols, static_cast<int>(r)), arch.num_clusters);
    Tensor x = generate(g, z, c);
    shape = x.shape();
    values.insert(values.end(), x.data().begin(), x.data().end());
    groups.insert(groups.end(), cols, arch.conditional ? static_cast<int>(r) : -1);
  }
  shape[0] = rows * cols;
  Tensor all = Tensor::from(shape, values);
  if (is_points(arch)) {
    write_points_csv(fs::path(stem).concat(".csv"), all, groups, "cluster");
    write_png(fs::path(stem).concat(".png"), scatter_plot(all, groups));
  } else {
    write_png(fs::path(stem).concat(".png"),
              tile_grid(values, rows * cols, arch.image_channels, arch.image_size, arch.image_size, rows, cols));
  }
}

fs::path resolve_data_path(const RunConfig& config) {
  const fs::path given = config.data.path;
  const char* root = std::getenv(kDataRootEnv);
  if (given.empty()) {
    if (!root) {
      throw ConfigError("data.path: empty and " + std::string(kDataRootEnv) + " is not set");
    }
    return fs::path(root) / to_string(config.data.source);
  }
  if (given.is_absolute() || fs::exists(given) || !root) return given;
  return fs::path(root) / given;
}

// Checkpoint config with data and eval taken from an override file.
RunConfig merged_config(const RunConfig& base, const std::optional<fs::path>& override_path) {
  if (!override_path) return base;
  RunConfig other = RunConfig::load(*override_path);
  RunConfig merged = base;
  merged.data = other.data;
  merged.eval = other.eval;
  merged.aug = other.aug;
  return merged;
}

}  // namespace

Dataset load_run_dataset(const RunConfig& config) {
  const auto& d = config.data;
  switch (d.source) {
    case DataSource::gmm:
      return Dataset::from_gmm(d.gmm, d.size, d.seed);
    case DataSource::image_dir:
      return Dataset::from_image_dir(resolve_data_path(config));
    case DataSource::mnist:
      return Dataset::from_mnist(resolve_data_path(config), d.size);
    case DataSource::cifar10:
      return Dataset::from_cifar10(resolve_data_path(config), d.size);
  }
  throw ConfigError("data.source: unsupported");
}

Raster scatter_plot(const Tensor& points, const std::vector<int>& groups, std::size_t size, double extent) {
  static constexpr std::uint8_t kPalette[10][3] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                                                   {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
                                                   {188, 189, 34},  {23, 190, 207}};
  Raster r;
  r.channels = 3;
  r.height = r.width = size;
  r.pixels.assign(size * size * 3, 255);
  const double half = static_cast<double>(size - 1) / 2.0;
  for (std::size_t i = 0; i < points.dim(0); ++i) {
    const double px = points.at(2 * i);
    const double py = points.at(2 * i + 1);
    const long cx = std::lround(half + px / extent * half);
    const long cy = std::lround(half - py / extent * half);
    const int g = groups.empty() ? 0 : groups[i];
    const auto* color = kPalette[g < 0 ? 7 : g % 10];
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const long x = cx + dx;
        const long y = cy + dy;
        if (x < 0 || y < 0 || x >= static_cast<long>(size) || y >= static_cast<long>(size)) continue;
        std::uint8_t* p = &r.pixels[(static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)) * 3];
        std::copy(color, color + 3, p);
      }
    }
  }
  return r;
}

// ------------------------------------------------------------------- train

fs::path train_run(RunConfig config, const std::optional<fs::path>& resume, bool quiet) {
  config.resolve();
  config.validate();
  const fs::path run = config.out_dir;
  fs::create_directories(run / "checkpoints");
  fs::create_directories(run / "samples");
  write_text(run / "config.resolved", config.to_text(true));

  std::unique_ptr<TrainState> state;
  if (resume) {
    state = load_checkpoint(*resume);
    if (state->config.to_text(false) != config.to_text(false)) {
      // Only the iteration budget and cadences may differ on resume.
      RunConfig a = state->config;
      RunConfig b = config;
      a.train.iterations = b.train.iterations;
      a.train.checkpoint_every = b.train.checkpoint_every;
      a.eval = b.eval;
      if (a.to_text(false) != b.to_text(false)) throw ConfigError("resume: config differs from the checkpoint's");
      state->config.train.iterations = config.train.iterations;
      state->config.train.checkpoint_every = config.train.checkpoint_every;
      state->config.eval = config.eval;
    }
  } else {
    state = TrainState::initialize(config);
  }

  const Dataset dataset = load_run_dataset(config);
  Trainer trainer(*state, dataset, !config.train.deterministic);

  const fs::path metrics_path = run / "metrics.csv";
  std::ofstream metrics_out;
  if (resume && fs::exists(metrics_path)) {
    metrics_out.open(metrics_path, std::ios::binary | std::ios::app);
  } else {
    metrics_out.open(metrics_path, std::ios::binary | std::ios::trunc);
    metrics_out << metrics_csv_header() << '\n';
  }
  if (!metrics_out) throw std::runtime_error("cannot write " + metrics_path.string());

  std::ofstream progress;
  const bool gmm = config.data.source == DataSource::gmm;
  if (config.eval.every > 0 && gmm) {
    fs::create_directories(run / "eval");
    progress.open(run / "eval" / "progress.csv", std::ios::binary | std::ios::trunc);
    progress << "iteration,modes_covered,high_quality,purity\n";
  }

  const std::size_t grid_rows = config.arch.conditional ? std::min<std::size_t>(config.train.num_clusters, 10) : 8;
  auto snapshot = [&](std::uint64_t iteration, const std::string& name) {
    save_checkpoint(*state, run / "checkpoints" / (name + ".ck"));
    Rng grid_rng(derive_seed(config.train.seed, 0x5a));
    write_sample_grid(state->generator, grid_rows, 8, grid_rng, run / "samples" / ("iter_" + std::to_string(iteration)));
  };

  auto on_row = [&](const MetricRow& row) {
    metrics_out << metrics_csv_row(row) << '\n';
    if (!quiet && (row.iteration % 100 == 0 || row.iteration == config.train.iterations)) {
      std::cerr << "iter " << row.iteration << "  d_hinge " << row.losses.d_hinge << "  g_adv " << row.losses.g_adv
                << "  g_mi " << row.losses.g_mi << "  c_adv " << row.losses.c_adv << "  c_aug " << row.losses.c_aug
                << '\n';
    }
    if (progress.is_open() && row.iteration % config.eval.every == 0) {
      Rng eval_rng(derive_seed(config.eval.feature_seed, row.iteration));
      Generated gen = generate_many(state->generator, std::min<std::size_t>(config.eval.num_samples, 2000), eval_rng);
      std::optional<std::vector<int>> codes;
      if (!gen.codes.empty()) codes = gen.codes;
      auto cov = metrics::mode_coverage(gen.x, config.data.gmm, codes, config.train.num_clusters);
      progress << row.iteration << ',' << cov.covered << ',' << fmt(cov.high_quality) << ','
               << (cov.purity ? fmt(*cov.purity) : std::string("")) << '\n';
    }
  };

  try {
    trainer.run(config.train.iterations, on_row, [&](std::uint64_t it) {
      metrics_out.flush();
      snapshot(it, "iter_" + std::to_string(it));
    });
  } catch (const DivergenceError& e) {
    metrics_out.flush();
    save_checkpoint(*state, run / "checkpoints" / ("diverged_" + std::to_string(e.iteration()) + ".ck"));
    throw;
  }
  metrics_out.flush();
  snapshot(state->iteration, "final");
  return run;
}

fs::path cmd_train(const TrainOptions& options) {
  RunConfig config = RunConfig::load(options.config);
  if (options.out) config.out_dir = options.out->string();
  if (options.seed) config.train.seed = *options.seed;
  if (options.deterministic) config.train.deterministic = *options.deterministic;
  return train_run(std::move(config), options.resume, options.quiet);
}

// -------------------------------------------------------------------- eval

metrics::Report cmd_eval(const EvalOptions& options) {
  static const std::set<std::string> kKnown = {"fid",       "is",     "accuracy", "purity",
                                               "histogram", "kmeans", "probe",    "mode_coverage"};
  if (options.metrics.empty()) throw ConfigError("--metrics: at least one metric is required");
  for (const auto& m : options.metrics) {
    if (!kKnown.contains(m)) {
      throw ConfigError("--metrics: unknown metric '" + m +
                        "' (known: fid, is, accuracy, purity, histogram, kmeans, probe, mode_coverage)");
    }
  }
  const CheckpointData ck = read_checkpoint_file(options.checkpoint);
  std::unique_ptr<TrainState> state = restore_state(ck);
  const RunConfig config = merged_config(state->config, options.config);
  const std::set<std::string> wanted(options.metrics.begin(), options.metrics.end());
  const std::size_t k = config.train.num_clusters;

  auto needs_extractor = wanted.contains("fid") || wanted.contains("is");
  std::unique_ptr<metrics::FeatureExtractor> extractor;
  if (needs_extractor) {
    extractor = metrics::make_feature_extractor(config.eval, config.arch.sample_shape());
    if (!extractor) {
      throw MetricError("fid/is need a feature extractor: set eval.feature_extractor (identity, random_projection or "
                        "classifier:<checkpoint>)");
    }
  }
  const bool needs_c = wanted.contains("accuracy") || wanted.contains("purity") || wanted.contains("histogram") ||
                       wanted.contains("kmeans") || wanted.contains("probe");
  if (needs_c && !state->clustering) {
    throw MetricError("clustering metrics need a clustering network; checkpoint mode is " + to_string(config.train.mode));
  }
  if (wanted.contains("mode_coverage") && config.data.source != DataSource::gmm) {
    throw MetricError("mode_coverage applies to gmm data only");
  }

  metrics::Report report;
  report.scalars["iteration"] = static_cast<double>(state->iteration);
  std::optional<Dataset> dataset;
  if (needs_c || wanted.contains("fid")) dataset.emplace(load_run_dataset(config));
  const bool labeled = dataset && dataset->has_labels();
  const bool needs_labels = wanted.contains("accuracy") || wanted.contains("purity") || wanted.contains("probe");
  if (needs_labels && !labeled) {
    throw MetricError("accuracy, purity and probe need ground-truth labels; the dataset has none");
  }

  Rng gen_rng(derive_seed(options.seed, 0xe1));
  std::optional<Generated> generated;
  if (wanted.contains("fid") || wanted.contains("is") || wanted.contains("mode_coverage")) {
    generated = generate_many(state->generator, config.eval.num_samples, gen_rng);
  }

  if (wanted.contains("fid")) {
    Tensor real = subsample(*dataset, config.eval.num_samples, derive_seed(options.seed, 0xe2));
    auto a = metrics::gaussian_stats(extractor->features(real));
    auto b = metrics::gaussian_stats(extractor->features(generated->x));
    report.scalars["fid"] = metrics::frechet_distance(a, b);
  }
  if (wanted.contains("is")) {
    auto [mean, stddev] = metrics::inception_style_score(extractor->class_probabilities(generated->x),
                                                         config.eval.is_splits);
    report.scalars["is_mean"] = mean;
    report.scalars["is_std"] = stddev;
  }
  if (wanted.contains("mode_coverage")) {
    std::optional<std::vector<int>> codes;
    if (!generated->codes.empty()) codes = generated->codes;
    auto cov = metrics::mode_coverage(generated->x, config.data.gmm, codes, k);
    report.scalars["modes_covered"] = static_cast<double>(cov.covered);
    report.scalars["high_quality_fraction"] = cov.high_quality;
    if (cov.purity) report.scalars["mode_purity"] = *cov.purity;
    report.vectors["mode_counts"] = std::vector<double>(cov.per_mode.begin(), cov.per_mode.end());
  }
  if (needs_c) {
    ClusteringNet& net = *state->clustering;
    Tensor x = subsample(*dataset, dataset->size(), 0);
    const std::vector<int> assign = argmax_rows(cluster_probabilities(net, x));
    if (wanted.contains("histogram")) {
      auto h = metrics::cluster_histogram(assign, k);
      report.vectors["cluster_histogram"] = std::vector<double>(h.begin(), h.end());
    }
    if (labeled && (wanted.contains("accuracy") || wanted.contains("purity"))) {
      auto table = metrics::contingency(assign, dataset->labels(), k, dataset->num_classes());
      if (wanted.contains("purity")) report.scalars["purity"] = metrics::purity(table);
      if (wanted.contains("accuracy")) report.scalars["accuracy"] = metrics::clustering_accuracy(table);
    }
    if (wanted.contains("kmeans") || wanted.contains("probe")) {
      // Penultimate-layer features of C, chunked.
      std::vector<double> values;
      for (std::size_t b = 0; b < x.dim(0); b += 512) {
        const std::size_t e = std::min(x.dim(0), b + 512);
        std::vector<std::size_t> idx(e - b);
        std::iota(idx.begin(), idx.end(), b);
        NoGradGuard no_grad;
        Tensor f = net.features(select_rows(x, idx), false);
        values.insert(values.end(), f.data().begin(), f.data().end());
      }
      const std::size_t width = values.size() / x.dim(0);
      Tensor features = Tensor::from({x.dim(0), width}, std::move(values));
      if (wanted.contains("kmeans")) {
        auto km = metrics::kmeans(features, k, derive_seed(options.seed, 0xe3));
        auto h = metrics::cluster_histogram(km.assignments, k);
        report.vectors["kmeans_histogram"] = std::vector<double>(h.begin(), h.end());
        if (labeled) {
          auto table = metrics::contingency(km.assignments, dataset->labels(), k, dataset->num_classes());
          report.scalars["kmeans_purity"] = metrics::purity(table);
          if (k <= dataset->num_classes()) report.scalars["kmeans_accuracy"] = metrics::clustering_accuracy(table);
        }
      }
      if (wanted.contains("probe")) {
        metrics::ProbeOptions po;
        po.seed = derive_seed(options.seed, 0xe4);
        auto probe = metrics::linear_probe(features, dataset->labels(), dataset->num_classes(), po);
        report.scalars["probe_train_accuracy"] = probe.train_accuracy;
        report.scalars["probe_test_accuracy"] = probe.test_accuracy;
      }
    }
  }

  const fs::path out = (options.out ? *options.out : run_dir_of(options.checkpoint)) / "eval";
  write_text(out / "report.json", report.to_json());
  write_text(out / "report.csv", report.to_csv());
  return report;
}

// ------------------------------------------------------------------ sample

fs::path cmd_sample(const SampleOptions& options) {
  auto state = load_checkpoint(options.checkpoint);
  const ArchConfig& arch = state->generator.arch();
  std::size_t rows = options.rows;
  if (arch.conditional) {
    if (rows == 0) rows = arch.num_clusters;
    if (rows > arch.num_clusters) {
      throw ConfigError("--rows: " + std::to_string(rows) + " exceeds the model's " +
                        std::to_string(arch.num_clusters) + " clusters");
    }
  } else if (rows == 0) {
    rows = 8;
  }
  if (options.cols == 0) throw ConfigError("--cols: must be positive");
  const fs::path out = (options.out ? *options.out : run_dir_of(options.checkpoint)) / "samples";
  Rng rng(derive_seed(options.seed, 0x5b));
  const fs::path stem = out / "grid";
  write_sample_grid(state->generator, rows, options.cols, rng, stem);
  std::ostringstream meta;
  meta << "rows = " << rows << "\ncols = " << options.cols << "\nseed = " << options.seed << "\n";
  if (arch.conditional) {
    meta << "conditioning = row r uses cluster id r\n";
  } else {
    meta << "conditioning = none (unconditional model; rows are independent draws)\n";
  }
  write_text(out / "grid_meta.txt", meta.str());
  return is_points(arch) ? fs::path(stem).concat(".csv") : fs::path(stem).concat(".png");
}

// ---------------------------------------------------------------- resample

ResampleResult cmd_resample(const ResampleOptions& options) {
  auto state = load_checkpoint(options.checkpoint);
  if (!state->clustering) throw ConfigError("resample: checkpoint has no clustering network (mode " +
                                            to_string(state->config.train.mode) + ")");
  const ArchConfig& arch = state->generator.arch();
  if (is_points(arch)) throw ConfigError("resample: needs an image model");
  if (options.n == 0) throw ConfigError("-n: must be positive");
  DecodedImage img = read_image(options.input);
  const Shape expected = arch.sample_shape();
  if (Shape{img.channels, img.height, img.width} != expected) {
    throw ConfigError("resample: input is " + shape_string({img.channels, img.height, img.width}) +
                      " but the model expects " + shape_string(expected));
  }
  std::vector<double> values(img.values.size());
  std::transform(img.values.begin(), img.values.end(), values.begin(), [](double v) { return 2.0 * v - 1.0; });
  Shape shape = expected;
  shape.insert(shape.begin(), 1);
  Tensor probs = cluster_probabilities(*state->clustering, Tensor::from(shape, std::move(values)));
  ResampleResult result;
  result.cluster = argmax_rows(probs)[0];
  result.confidence = probs.at(static_cast<std::size_t>(result.cluster));

  Rng rng(derive_seed(options.seed, 0x5c));
  Generated gen = generate_many(state->generator, options.n, rng, result.cluster);
  const fs::path out = (options.out ? *options.out : run_dir_of(options.checkpoint)) / "samples";
  result.strip = out / "resample.png";
  result.sidecar = out / "resample.txt";
  write_png(result.strip, tile_grid(std::vector<double>(gen.x.data().begin(), gen.x.data().end()), options.n,
                                    arch.image_channels, arch.image_size, arch.image_size, 1, options.n));
  std::ostringstream meta;
  meta << "input = " << options.input.string() << "\ncluster = " << result.cluster
       << "\nconfidence = " << fmt(result.confidence) << "\nn = " << options.n << "\nseed = " << options.seed
       << "\nconditioning =";
  for (int c : gen.codes) meta << ' ' << c;
  meta << '\n';
  write_text(result.sidecar, meta.str());
  return result;
}

// ---------------------------------------------------------- cluster export

std::vector<ClusterPanel> cmd_cluster_export(const ClusterExportOptions& options) {
  auto state = load_checkpoint(options.checkpoint);
  if (!state->clustering) throw ConfigError("cluster-export: checkpoint has no clustering network");
  if (options.top_n == 0) throw ConfigError("--top-n: must be positive");
  if (options.pool < options.top_n) throw ConfigError("cluster-export: pool smaller than top-n");
  const RunConfig config = merged_config(state->config, options.config);
  const std::size_t k = config.train.num_clusters;
  std::vector<int> clusters = options.clusters;
  if (clusters.empty()) {
    clusters.resize(k);
    std::iota(clusters.begin(), clusters.end(), 0);
  }
  for (int c : clusters) {
    if (c < 0 || static_cast<std::size_t>(c) >= k) {
      throw ConfigError("--clusters: id " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
    }
  }

  const Dataset dataset = load_run_dataset(config);
  ClusteringNet& net = *state->clustering;
  const ArchConfig& arch = state->generator.arch();
  Tensor x = subsample(dataset, dataset.size(), 0);
  Tensor probs = cluster_probabilities(net, x);
  const std::vector<int> assign = argmax_rows(probs);
  const fs::path out = (options.out ? *options.out : run_dir_of(options.checkpoint)) / "clusters";
  fs::create_directories(out);

  auto panel = [&](const Tensor& samples, const std::vector<std::size_t>& order, const fs::path& stem) {
    Tensor chosen = select_rows(samples, order);
    if (is_points(arch)) {
      write_points_csv(fs::path(stem).concat(".csv"), chosen, {}, "rank");
    } else {
      write_png(fs::path(stem).concat(".png"),
                tile_grid(std::vector<double>(chosen.data().begin(), chosen.data().end()), order.size(),
                          arch.image_channels, arch.image_size, arch.image_size, 1, order.size()));
    }
  };

  std::vector<ClusterPanel> panels;
  Rng rng(derive_seed(options.seed, 0x5d));
  for (int c : clusters) {
    ClusterPanel p;
    p.cluster = c;
    const auto col = static_cast<std::size_t>(c);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < assign.size(); ++i) {
      if (assign[i] == c) members.push_back(i);
    }
    // Generated pool is drawn even for empty clusters so later clusters see
    // the same noise regardless of which are skipped.
    Generated gen = generate_many(state->generator, options.pool, rng, c);
    if (members.empty()) {
      std::cerr << "cluster " << c << ": no real samples assigned, panel skipped\n";
      p.skipped = true;
      panels.push_back(p);
      continue;
    }
    auto by_confidence = [&](const Tensor& pr) {
      return [&pr, col, k](std::size_t a, std::size_t b) {
        const double pa = pr.at(a * k + col);
        const double pb = pr.at(b * k + col);
        return pa != pb ? pa > pb : a < b;
      };
    };
    std::stable_sort(members.begin(), members.end(), by_confidence(probs));
    members.resize(std::min(members.size(), options.top_n));
    for (auto i : members) p.real_confidence.push_back(probs.at(i * k + col));
    panel(x, members, out / ("cluster_" + std::to_string(c) + "_real"));

    Tensor gen_probs = cluster_probabilities(net, gen.x);
    std::vector<std::size_t> order(options.pool);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), by_confidence(gen_probs));
    order.resize(options.top_n);
    for (auto i : order) p.fake_confidence.push_back(gen_probs.at(i * k + col));
    panel(gen.x, order, out / ("cluster_" + std::to_string(c) + "_generated"));

    std::ostringstream os;
    os << "panel,rank,confidence\n";
    for (std::size_t r = 0; r < p.real_confidence.size(); ++r) os << "real," << r << ',' << fmt(p.real_confidence[r]) << '\n';
    for (std::size_t r = 0; r < p.fake_confidence.size(); ++r) os << "generated," << r << ',' << fmt(p.fake_confidence[r]) << '\n';
    write_text(out / ("cluster_" + std::to_string(c) + ".csv"), os.str());
    panels.push_back(std::move(p));
  }
  return panels;
}

}  // namespace slcgan
