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

#include "slcgan/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "slcgan/errors.hpp"

namespace slcgan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError(key + ": invalid value '" + value + "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a real number");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::vector<std::array<double, 2>> parse_centers(const std::string& key, const std::string& v) {
  if (v.rfind("ring:", 0) == 0) {
    auto parts = split(v.substr(5), ':');
    if (parts.size() != 2) bad_value(key, v, "ring:<count>:<radius>");
    return GaussianMixtureSpec::ring(parse_size(key, parts[0]), parse_double(key, parts[1]), 1.0).centers;
  }
  std::vector<std::array<double, 2>> centers;
  for (const auto& pair : split(v, ';')) {
    if (pair.empty()) continue;
    auto xy = split(pair, ',');
    if (xy.size() != 2) bad_value(key, v, "'x,y; x,y; ...' or ring:<count>:<radius>");
    centers.push_back({parse_double(key, xy[0]), parse_double(key, xy[1])});
  }
  return centers;
}

struct KeySpec {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
KeySpec size_key(T RunConfig::*section, std::size_t T::*field) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = parse_size(k, v); },
          [=](const RunConfig& c) { return fmt(static_cast<std::uint64_t>((c.*section).*field)); }};
}

template <typename T>
KeySpec u64_key(T RunConfig::*section, std::uint64_t T::*field) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = parse_u64(k, v); },
          [=](const RunConfig& c) { return fmt((c.*section).*field); }};
}

template <typename T>
KeySpec double_key(T RunConfig::*section, double T::*field) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = parse_double(k, v); },
          [=](const RunConfig& c) { return fmt((c.*section).*field); }};
}

template <typename T>
KeySpec bool_key(T RunConfig::*section, bool T::*field) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = parse_bool(k, v); },
          [=](const RunConfig& c) { return fmt((c.*section).*field); }};
}

const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = [] {
    std::map<std::string, KeySpec> t;
    using R = RunConfig;
    // train
    t["train.mode"] = {[](R& c, const std::string& k, const std::string& v) {
                         if (v == "ugan") c.train.mode = TrainMode::ugan;
                         else if (v == "cgan") c.train.mode = TrainMode::cgan;
                         else if (v == "slcgan") c.train.mode = TrainMode::slcgan;
                         else bad_value(k, v, "ugan, cgan or slcgan");
                       },
                       [](const R& c) { return to_string(c.train.mode); }};
    t["train.num_clusters"] = size_key(&R::train, &TrainConfig::num_clusters);
    t["train.d_steps_per_g"] = size_key(&R::train, &TrainConfig::d_steps_per_g);
    t["train.learning_rate"] = double_key(&R::train, &TrainConfig::learning_rate);
    t["train.beta1"] = double_key(&R::train, &TrainConfig::beta1);
    t["train.beta2"] = double_key(&R::train, &TrainConfig::beta2);
    t["train.batch_size"] = size_key(&R::train, &TrainConfig::batch_size);
    t["train.iterations"] = size_key(&R::train, &TrainConfig::iterations);
    t["train.lambda_adv"] = {[](R& c, const std::string& k, const std::string& v) { c.train.lambdas.adv = parse_double(k, v); },
                             [](const R& c) { return fmt(c.train.lambdas.adv); }};
    t["train.lambda_mi"] = {[](R& c, const std::string& k, const std::string& v) { c.train.lambdas.mi = parse_double(k, v); },
                            [](const R& c) { return fmt(c.train.lambdas.mi); }};
    t["train.lambda_aug"] = {[](R& c, const std::string& k, const std::string& v) { c.train.lambdas.aug = parse_double(k, v); },
                             [](const R& c) { return fmt(c.train.lambdas.aug); }};
    t["train.seed"] = u64_key(&R::train, &TrainConfig::seed);
    t["train.deterministic"] = bool_key(&R::train, &TrainConfig::deterministic);
    t["train.mi_updates_c"] = bool_key(&R::train, &TrainConfig::mi_updates_c);
    t["train.checkpoint_every"] = size_key(&R::train, &TrainConfig::checkpoint_every);
    // arch
    t["arch.family"] = {[](R& c, const std::string& k, const std::string& v) {
                          if (v == "mlp") c.arch.family = Family::mlp;
                          else if (v == "conv") c.arch.family = Family::conv;
                          else bad_value(k, v, "mlp or conv");
                        },
                        [](const R& c) { return to_string(c.arch.family); }};
    t["arch.latent_dim"] = size_key(&R::arch, &ArchConfig::latent_dim);
    t["arch.embed_dim"] = size_key(&R::arch, &ArchConfig::embed_dim);
    t["arch.data_dim"] = size_key(&R::arch, &ArchConfig::data_dim);
    t["arch.hidden"] = size_key(&R::arch, &ArchConfig::hidden);
    t["arch.c_hidden"] = size_key(&R::arch, &ArchConfig::c_hidden);
    t["arch.output_scale"] = double_key(&R::arch, &ArchConfig::output_scale);
    t["arch.channels"] = size_key(&R::arch, &ArchConfig::channels);
    t["arch.image_size"] = size_key(&R::arch, &ArchConfig::image_size);
    t["arch.image_channels"] = size_key(&R::arch, &ArchConfig::image_channels);
    t["arch.backbone"] = {[](R& c, const std::string& k, const std::string& v) {
                            if (v == "small") c.arch.backbone = ClusterBackbone::small;
                            else if (v == "resnet18") c.arch.backbone = ClusterBackbone::resnet18;
                            else bad_value(k, v, "small or resnet18");
                          },
                          [](const R& c) { return to_string(c.arch.backbone); }};
    t["arch.penultimate"] = size_key(&R::arch, &ArchConfig::penultimate);
    t["arch.spectral_norm"] = {[](R& c, const std::string& k, const std::string& v) {
                                 c.arch.spectral_g = c.arch.spectral_d = c.arch.spectral_c = false;
                                 if (v == "none") return;
                                 for (const auto& net : split(v, ',')) {
                                   if (net == "g") c.arch.spectral_g = true;
                                   else if (net == "d") c.arch.spectral_d = true;
                                   else if (net == "c") c.arch.spectral_c = true;
                                   else bad_value(k, v, "a comma list of g, d, c or 'none'");
                                 }
                               },
                               [](const R& c) {
                                 std::vector<std::string> nets;
                                 if (c.arch.spectral_g) nets.push_back("g");
                                 if (c.arch.spectral_d) nets.push_back("d");
                                 if (c.arch.spectral_c) nets.push_back("c");
                                 if (nets.empty()) return std::string("none");
                                 std::string out = nets[0];
                                 for (std::size_t i = 1; i < nets.size(); ++i) out += "," + nets[i];
                                 return out;
                               }};
    t["arch.zero_init_c_head"] = bool_key(&R::arch, &ArchConfig::zero_init_c_head);
    // data
    t["data.source"] = {[](R& c, const std::string& k, const std::string& v) {
                          if (v == "gmm") c.data.source = DataSource::gmm;
                          else if (v == "image_dir") c.data.source = DataSource::image_dir;
                          else if (v == "mnist") c.data.source = DataSource::mnist;
                          else if (v == "cifar10") c.data.source = DataSource::cifar10;
                          else bad_value(k, v, "gmm, image_dir, mnist or cifar10");
                        },
                        [](const R& c) { return to_string(c.data.source); }};
    t["data.path"] = {[](R& c, const std::string&, const std::string& v) { c.data.path = v; },
                      [](const R& c) { return c.data.path; }};
    t["data.size"] = size_key(&R::data, &DataConfig::size);
    t["data.seed"] = u64_key(&R::data, &DataConfig::seed);
    t["data.gmm.centers"] = {[](R& c, const std::string& k, const std::string& v) {
                               c.data.gmm.centers = parse_centers(k, v);
                               c.data.gmm.weights.assign(c.data.gmm.centers.size(),
                                                         1.0 / static_cast<double>(c.data.gmm.centers.size()));
                             },
                             [](const R& c) {
                               std::string out;
                               for (const auto& p : c.data.gmm.centers) {
                                 if (!out.empty()) out += "; ";
                                 out += fmt(p[0]) + "," + fmt(p[1]);
                               }
                               return out;
                             }};
    t["data.gmm.sigma"] = {[](R& c, const std::string& k, const std::string& v) { c.data.gmm.sigma = parse_double(k, v); },
                           [](const R& c) { return fmt(c.data.gmm.sigma); }};
    t["data.gmm.weights"] = {[](R& c, const std::string& k, const std::string& v) {
                               if (v == "uniform") {
                                 c.data.gmm.weights.assign(c.data.gmm.centers.size(),
                                                           1.0 / static_cast<double>(c.data.gmm.centers.size()));
                                 return;
                               }
                               c.data.gmm.weights.clear();
                               for (const auto& w : split(v, ',')) c.data.gmm.weights.push_back(parse_double(k, w));
                             },
                             [](const R& c) {
                               std::string out;
                               for (double w : c.data.gmm.weights) out += (out.empty() ? "" : ",") + fmt(w);
                               return out;
                             }};
    // aug
    t["aug.crop_low"] = double_key(&R::aug, &AugmentationPolicy::crop_low);
    t["aug.crop_high"] = double_key(&R::aug, &AugmentationPolicy::crop_high);
    t["aug.jitter"] = double_key(&R::aug, &AugmentationPolicy::jitter);
    t["aug.hflip_prob"] = double_key(&R::aug, &AugmentationPolicy::hflip_prob);
    t["aug.point_noise"] = double_key(&R::aug, &AugmentationPolicy::point_noise);
    // eval
    t["eval.every"] = size_key(&R::eval, &EvalConfig::every);
    t["eval.num_samples"] = size_key(&R::eval, &EvalConfig::num_samples);
    t["eval.feature_extractor"] = {[](R& c, const std::string&, const std::string& v) { c.eval.feature_extractor = v; },
                                   [](const R& c) { return c.eval.feature_extractor; }};
    t["eval.feature_dim"] = size_key(&R::eval, &EvalConfig::feature_dim);
    t["eval.feature_classes"] = size_key(&R::eval, &EvalConfig::feature_classes);
    t["eval.feature_seed"] = u64_key(&R::eval, &EvalConfig::feature_seed);
    t["eval.is_splits"] = size_key(&R::eval, &EvalConfig::is_splits);
    // run
    t["run.out_dir"] = {[](R& c, const std::string&, const std::string& v) { c.out_dir = v; },
                        [](const R& c) { return c.out_dir; }};
    return t;
  }();
  return table;
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::ugan: return "ugan";
    case TrainMode::cgan: return "cgan";
    case TrainMode::slcgan: return "slcgan";
  }
  return "?";
}

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::gmm: return "gmm";
    case DataSource::image_dir: return "image_dir";
    case DataSource::mnist: return "mnist";
    case DataSource::cifar10: return "cifar10";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (num_clusters < 1) throw ConfigError("train.num_clusters: must be >= 1");
  if (d_steps_per_g < 1) throw ConfigError("train.d_steps_per_g: must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate: must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1: must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2: must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  lambdas.validate();
}

RunConfig RunConfig::parse(const std::string& text) {
  const auto& table = key_table();
  std::vector<std::pair<std::string, std::string>> entries;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!table.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
    entries.emplace_back(std::move(key), std::move(value));
  }

  RunConfig config;
  // The family selects architecture defaults, so it is applied first.
  for (const auto& [key, value] : entries) {
    if (key == "arch.family") table.at(key).set(config, key, value);
  }
  config.arch = ArchConfig::defaults(config.arch.family);
  // Centers before weights so explicit weights are not reset.
  for (const auto& [key, value] : entries) {
    if (key == "data.gmm.centers") table.at(key).set(config, key, value);
  }
  for (const auto& [key, value] : entries) {
    if (key != "data.gmm.centers") table.at(key).set(config, key, value);
  }
  if (config.data.source == DataSource::mnist && !seen.contains("aug.hflip_prob")) {
    config.aug.hflip_prob = 0.0;
  }
  config.resolve();
  config.validate();
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string RunConfig::to_text(bool include_output) const {
  std::ostringstream os;
  for (const auto& [key, spec] : key_table()) {
    if (!include_output && key == "run.out_dir") continue;
    os << key << " = " << spec.get(*this) << '\n';
  }
  return os.str();
}

void RunConfig::resolve() {
  arch.num_clusters = train.num_clusters;
  arch.conditional = train.mode != TrainMode::ugan;
}

void RunConfig::validate() const {
  train.validate();
  if (arch.num_clusters != train.num_clusters || arch.conditional != (train.mode != TrainMode::ugan)) {
    throw ConfigError("arch: cluster count or conditioning disagrees with train; call resolve()");
  }
  arch.validate();
  aug.validate();
  if (data.source == DataSource::gmm) {
    data.gmm.validate();
    if (arch.family != Family::mlp || arch.data_dim != 2) {
      throw ConfigError("data.source: gmm points require arch.family = mlp with arch.data_dim = 2");
    }
    if (data.size == 0) throw ConfigError("data.size: gmm datasets need a positive size");
  }
  if (eval.num_samples == 0) throw ConfigError("eval.num_samples: must be positive");
  if (eval.is_splits == 0) throw ConfigError("eval.is_splits: must be positive");
  if (eval.feature_dim == 0) throw ConfigError("eval.feature_dim: must be positive");
  if (eval.feature_classes < 2) throw ConfigError("eval.feature_classes: must be >= 2");
  const auto& fx = eval.feature_extractor;
  if (fx != "none" && fx != "identity" && fx != "random_projection" && fx.rfind("classifier:", 0) != 0) {
    throw ConfigError("eval.feature_extractor: invalid value '" + fx +
                      "' (expected none, identity, random_projection or classifier:<checkpoint>)");
  }
}

RunConfig gmm_ring_config(TrainMode mode, std::uint64_t seed) {
  RunConfig c;
  c.train.mode = mode;
  c.train.num_clusters = 8;
  c.train.seed = seed;
  c.data.source = DataSource::gmm;
  c.data.gmm = GaussianMixtureSpec::ring(8, 1.0, 0.05);
  c.arch = ArchConfig::defaults(Family::mlp);
  c.train.iterations = 4000;
  c.arch.output_scale = 1.5;
  c.aug.point_noise = 0.15;
  c.resolve();
  c.validate();
  return c;
}

}  // namespace slcgan
