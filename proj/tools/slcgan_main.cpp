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

// Command-line front end. Exit codes: 0 success, 1 invalid input,
// 2 runtime or numeric failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slcgan/commands.hpp"
#include "slcgan/errors.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto comma = item.find(',', start);
      const auto piece = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.push_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional GAN training on pseudo-labels from a jointly trained clustering network"};
  app.require_subcommand(1);

  // train
  slcgan::TrainOptions train;
  std::string train_out, train_resume;
  std::optional<std::uint64_t> train_seed;
  std::optional<bool> train_det;
  bool verbose = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", train.config, "Run config (key = value lines)")->required();
  train_cmd->add_option("--out", train_out, "Run directory (overrides run.out_dir)");
  train_cmd->add_option("--seed", train_seed, "Override train.seed");
  train_cmd->add_option("--deterministic", train_det, "Override train.deterministic (true/false)");
  train_cmd->add_option("--checkpoint", train_resume, "Resume from this checkpoint");
  train_cmd->add_flag("-v,--verbose", verbose, "Print loss values every 100 iterations");

  // eval
  slcgan::EvalOptions eval;
  std::vector<std::string> eval_metrics;
  std::string eval_out, eval_config;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--metrics", eval_metrics,
                       "Comma list: fid,is,accuracy,purity,histogram,kmeans,probe,mode_coverage")
      ->required();
  eval_cmd->add_option("--out", eval_out, "Output directory (default: the checkpoint's run)");
  eval_cmd->add_option("--config", eval_config, "Config whose data/eval/aug sections override the checkpoint's");
  eval_cmd->add_option("--seed", eval.seed, "Sampling seed");

  // sample
  slcgan::SampleOptions sample;
  std::string sample_out;
  auto* sample_cmd = app.add_subcommand("sample", "Write a grid of generated samples, one row per cluster");
  sample_cmd->add_option("--checkpoint", sample.checkpoint, "Checkpoint file")->required();
  sample_cmd->add_option("--rows,--clusters", sample.rows, "Rows (clusters 0..rows-1); 0 = all");
  sample_cmd->add_option("--cols", sample.cols, "Latent draws per row");
  sample_cmd->add_option("--out", sample_out, "Output directory");
  sample_cmd->add_option("--seed", sample.seed, "Sampling seed");

  // resample
  slcgan::ResampleOptions resample;
  std::string resample_out;
  auto* resample_cmd = app.add_subcommand("resample", "Generate new samples from the cluster of an input image");
  resample_cmd->add_option("--checkpoint", resample.checkpoint, "Checkpoint file")->required();
  resample_cmd->add_option("--input", resample.input, "Input image")->required();
  resample_cmd->add_option("-n", resample.n, "Number of samples");
  resample_cmd->add_option("--out", resample_out, "Output directory");
  resample_cmd->add_option("--seed", resample.seed, "Sampling seed");

  // cluster-export
  slcgan::ClusterExportOptions export_opts;
  std::string export_out, export_config;
  auto* export_cmd = app.add_subcommand("cluster-export", "Per-cluster panels of real and generated samples");
  export_cmd->add_option("--checkpoint", export_opts.checkpoint, "Checkpoint file")->required();
  export_cmd->add_option("--clusters", export_opts.clusters, "Cluster ids (default: all)")->delimiter(',');
  export_cmd->add_option("--top-n", export_opts.top_n, "Samples per panel");
  export_cmd->add_option("--out", export_out, "Output directory");
  export_cmd->add_option("--config", export_config, "Config whose data section overrides the checkpoint's");
  export_cmd->add_option("--seed", export_opts.seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*train_cmd) {
      if (!train_out.empty()) train.out = train_out;
      if (!train_resume.empty()) train.resume = train_resume;
      train.seed = train_seed;
      train.deterministic = train_det;
      train.quiet = !verbose;
      std::cout << slcgan::cmd_train(train).string() << '\n';
    } else if (*eval_cmd) {
      eval.metrics = split_list(eval_metrics);
      if (!eval_out.empty()) eval.out = eval_out;
      if (!eval_config.empty()) eval.config = eval_config;
      std::cout << slcgan::cmd_eval(eval).to_json();
    } else if (*sample_cmd) {
      if (!sample_out.empty()) sample.out = sample_out;
      std::cout << slcgan::cmd_sample(sample).string() << '\n';
    } else if (*resample_cmd) {
      if (!resample_out.empty()) resample.out = resample_out;
      auto r = slcgan::cmd_resample(resample);
      std::cout << "cluster " << r.cluster << " confidence " << r.confidence << '\n' << r.strip.string() << '\n';
    } else if (*export_cmd) {
      if (!export_out.empty()) export_opts.out = export_out;
      if (!export_config.empty()) export_opts.config = export_config;
      for (const auto& p : slcgan::cmd_cluster_export(export_opts)) {
        std::cout << "cluster " << p.cluster << (p.skipped ? " skipped (empty)" : "") << '\n';
      }
    }
  } catch (const std::invalid_argument& e) {
    // ConfigError and MetricError: bad input the user can fix.
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
