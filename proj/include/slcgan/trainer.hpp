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

#ifndef SLCGAN_TRAINER_HPP_
#define SLCGAN_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slcgan/config.hpp"
#include "slcgan/losses.hpp"
#include "slcgan/models.hpp"
#include "slcgan/rng.hpp"
#include "slcgan/sampling.hpp"

namespace slcgan {

// Adam with bias correction. Parameters without a gradient are skipped.
class Adam {
 public:
  Adam() = default;
  Adam(const ParamSet& params, double lr, double beta1, double beta2, double eps = 1e-8);

  void step();

  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }
  const std::vector<NamedTensor>& params() const { return params_; }
  std::vector<std::vector<double>>& first_moment() { return m_; }
  std::vector<std::vector<double>>& second_moment() { return v_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  std::vector<NamedTensor> params_;
  double lr_ = 1e-4;
  double beta1_ = 0.0;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t steps_ = 0;
};

// Everything that evolves during training. Held behind a pointer: layers
// register raw buffer addresses, so the object must not move.
struct TrainState {
  explicit TrainState(const RunConfig& config);
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  RunConfig config;
  std::uint64_t iteration = 0;
  Generator generator;
  Discriminator discriminator;
  std::optional<ClusteringNet> clustering;  // slcgan mode only
  Adam opt_g;
  Adam opt_d;
  std::optional<Adam> opt_c;
  Rng rng;
  BatchIterator::Position data_position;

  static std::unique_ptr<TrainState> initialize(const RunConfig& config);
};

struct MetricRow {
  std::uint64_t iteration = 0;
  losses::LossBreakdown losses;
};

// CSV layout of the per-iteration metric log.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricRow& row);

// Per-network objectives on fixed inputs. Each evaluates one network's
// weighted objective, back-propagates it into that network's parameters only
// (the others are frozen for the duration), fills the matching fields of
// `parts` and returns the weighted total. Gradients accumulate.

// adv * d_hinge. Inputs are treated as constants.
double backprop_discriminator(Discriminator& d, const Tensor& real, const std::optional<Tensor>& real_label,
                              const Tensor& fake, const std::optional<Tensor>& fake_label,
                              const losses::LossWeights& weights, losses::LossBreakdown& parts);
// adv * g_adv + mi * g_mi; pass clustering = nullptr to drop the second term.
double backprop_generator(Generator& g, Discriminator& d, ClusteringNet* clustering, const Tensor& z,
                          const std::optional<Tensor>& label, const losses::LossWeights& weights,
                          losses::LossBreakdown& parts);
// adv * c_adv + aug * c_aug, plus mi * mi_loss on (fakes, one-hots) when given.
// `view_probs` is C's prediction on an augmented view, used as a constant
// target.
double backprop_clustering(ClusteringNet& c, Discriminator& d, const Tensor& real, const Tensor& view_probs,
                           const std::optional<std::pair<Tensor, Tensor>>& mi_fakes,
                           const losses::LossWeights& weights, losses::LossBreakdown& parts);

// Runs the three-player schedule on a TrainState. Each step mutates the
// parameters of exactly one network.
class Trainer {
 public:
  // `state` and `dataset` must outlive the trainer.
  Trainer(TrainState& state, const Dataset& dataset, bool prefetch = false);

  // Next real batch; records the data position in the state.
  Batch next_batch();

  // Hinge update of D on `real` and a fresh fake batch. Returns d_hinge.
  double d_step(const Batch& real);
  // Adversarial plus mutual-information update of G on fresh (z, c).
  // Returns (g_adv, g_mi); g_mi is 0 outside slcgan mode.
  std::pair<double, double> g_step();
  // Update of C on `real` and an augmented view. Returns (c_adv, c_aug);
  // a no-op returning zeros outside slcgan mode.
  std::pair<double, double> c_step(const Batch& real);

  // One full iteration: D steps, G step, C step. d_hinge is the last D step.
  MetricRow step();
  // Iterates until state.iteration reaches `target`. `on_row` sees every
  // iteration; `on_checkpoint` fires every train.checkpoint_every iterations.
  void run(std::uint64_t target, const std::function<void(const MetricRow&)>& on_row = {},
           const std::function<void(std::uint64_t)>& on_checkpoint = {});

  TrainState& state() { return state_; }

 private:
  // Conditioning for real samples as seen by D: C(x) probabilities
  // (slcgan), ground-truth one-hots (cgan), none (ugan).
  std::optional<Tensor> real_condition(const Batch& real);
  void check_loss(double value, const char* what) const;

  TrainState& state_;
  const Dataset& dataset_;
  BatchIterator batches_;
};

// Generator output for the given codes with BN in inference mode. A missing
// condition is only valid for an unconditional generator.
Tensor generate(Generator& generator, const LatentCode& z, const std::optional<ConditioningCode>& c);

// Cluster probabilities of C on x, evaluated in inference mode in chunks.
Tensor cluster_probabilities(ClusteringNet& net, const Tensor& x, std::size_t chunk = 512);

}  // namespace slcgan

#endif  // SLCGAN_TRAINER_HPP_
