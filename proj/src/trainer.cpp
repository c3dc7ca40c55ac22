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

#include "slcgan/trainer.hpp"

#include <charconv>
#include <cmath>

#include "slcgan/errors.hpp"
#include "slcgan/ops.hpp"

namespace slcgan {

namespace {

// Independent RNG streams derived from the run seed.
enum StreamTag : std::uint64_t {
  kInitG = 0x10,
  kInitD = 0x11,
  kInitC = 0x12,
  kTrainNoise = 0x20,
  kBatchOrder = 0x30,
};

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Tensor onehot_from(const std::vector<int>& labels, std::size_t k) {
  return make_condition(labels, k).onehot;
}

// Temporarily stops gradient accumulation into a network's parameters.
class FrozenParams {
 public:
  explicit FrozenParams(ParamSet set) : set_(std::move(set)) { set_requires_grad(set_, false); }
  ~FrozenParams() { set_requires_grad(set_, true); }
  FrozenParams(const FrozenParams&) = delete;
  FrozenParams& operator=(const FrozenParams&) = delete;

 private:
  ParamSet set_;
};

}  // namespace

// -------------------------------------------------------------------- Adam

Adam::Adam(const ParamSet& params, double lr, double beta1, double beta2, double eps)
    : params_(params.params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    if (!p.has_grad()) continue;
    auto value = p.mutable_data();
    auto grad = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * grad[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * grad[j] * grad[j];
      value[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

// -------------------------------------------------------------- TrainState

namespace {

ArchConfig arch_for(const RunConfig& config) {
  ArchConfig arch = config.arch;
  arch.num_clusters = config.train.num_clusters;
  arch.conditional = config.train.mode != TrainMode::ugan;
  return arch;
}

Generator make_generator(const RunConfig& c) {
  Rng rng(derive_seed(c.train.seed, kInitG));
  return Generator(arch_for(c), rng);
}

Discriminator make_discriminator(const RunConfig& c) {
  Rng rng(derive_seed(c.train.seed, kInitD));
  return Discriminator(arch_for(c), rng);
}

}  // namespace

TrainState::TrainState(const RunConfig& cfg)
    : config(cfg),
      generator(make_generator(cfg)),
      discriminator(make_discriminator(cfg)),
      rng(derive_seed(cfg.train.seed, kTrainNoise)) {
  const auto& t = config.train;
  opt_g = Adam(generator.parameters(), t.learning_rate, t.beta1, t.beta2);
  opt_d = Adam(discriminator.parameters(), t.learning_rate, t.beta1, t.beta2);
  if (t.mode == TrainMode::slcgan) {
    Rng init(derive_seed(t.seed, kInitC));
    clustering.emplace(arch_for(config), init);
    opt_c = Adam(clustering->parameters(), t.learning_rate, t.beta1, t.beta2);
  }
}

std::unique_ptr<TrainState> TrainState::initialize(const RunConfig& config) {
  config.validate();
  return std::make_unique<TrainState>(config);
}

// ------------------------------------------------------------- metric rows

std::string metrics_csv_header() { return "iteration,d_hinge,g_adv,g_mi,c_adv,c_aug"; }

std::string metrics_csv_row(const MetricRow& row) {
  const auto& l = row.losses;
  return std::to_string(row.iteration) + "," + fmt(l.d_hinge) + "," + fmt(l.g_adv) + "," + fmt(l.g_mi) +
         "," + fmt(l.c_adv) + "," + fmt(l.c_aug);
}

// -------------------------------------------------------------- objectives

double backprop_discriminator(Discriminator& d, const Tensor& real, const std::optional<Tensor>& real_label,
                              const Tensor& fake, const std::optional<Tensor>& fake_label,
                              const losses::LossWeights& weights, losses::LossBreakdown& parts) {
  ScorePair real_scores = d.forward(real, real_label, true);
  ScorePair fake_scores = d.forward(fake, fake_label, true);
  Tensor hinge = losses::d_hinge_loss(real_scores, fake_scores);
  Tensor objective = ops::scale(hinge, weights.adv);
  objective.backward();
  parts.d_hinge = hinge.item();
  return objective.item();
}

double backprop_generator(Generator& g, Discriminator& d, ClusteringNet* clustering, const Tensor& z,
                          const std::optional<Tensor>& label, const losses::LossWeights& weights,
                          losses::LossBreakdown& parts) {
  FrozenParams frozen_d(d.parameters());
  std::optional<FrozenParams> frozen_c;
  if (clustering) frozen_c.emplace(clustering->parameters());

  Tensor fake = g.forward(z, label, true);
  Tensor adv = losses::g_adv_loss(d.forward(fake, label, false));
  Tensor objective = ops::scale(adv, weights.adv);
  parts.g_adv = adv.item();
  parts.g_mi = 0.0;
  if (clustering) {
    if (!label) throw ConfigError("backprop_generator: the mutual-information term needs a label");
    Tensor mi = losses::mi_loss(clustering->forward(fake, false), *label);
    parts.g_mi = mi.item();
    objective = ops::add(objective, ops::scale(mi, weights.mi));
  }
  objective.backward();
  return objective.item();
}

double backprop_clustering(ClusteringNet& c, Discriminator& d, const Tensor& real, const Tensor& view_probs,
                           const std::optional<std::pair<Tensor, Tensor>>& mi_fakes,
                           const losses::LossWeights& weights, losses::LossBreakdown& parts) {
  FrozenParams frozen_d(d.parameters());
  Tensor p = c.forward(real, true);
  Tensor adv = losses::c_adv_loss(d.forward(real, p, false));
  Tensor aug = losses::aug_consistency_loss(p, view_probs);
  Tensor objective = ops::add(ops::scale(adv, weights.adv), ops::scale(aug, weights.aug));
  if (mi_fakes) {
    Tensor mi = losses::mi_loss(c.forward(mi_fakes->first, true), mi_fakes->second);
    objective = ops::add(objective, ops::scale(mi, weights.mi));
  }
  objective.backward();
  parts.c_adv = adv.item();
  parts.c_aug = aug.item();
  return objective.item();
}

// ----------------------------------------------------------------- Trainer

Trainer::Trainer(TrainState& state, const Dataset& dataset, bool prefetch)
    : state_(state),
      dataset_(dataset),
      batches_(dataset, state.config.train.batch_size, derive_seed(state.config.train.seed, kBatchOrder),
               prefetch) {
  const auto& t = state_.config.train;
  if (dataset_.size() < t.batch_size) {
    throw ConfigError("train.batch_size: dataset has only " + std::to_string(dataset_.size()) + " samples");
  }
  if (dataset_.sample_shape() != state_.config.arch.sample_shape()) {
    throw ConfigError("arch: model sample shape " + shape_string(state_.config.arch.sample_shape()) +
                      " does not match dataset shape " + shape_string(dataset_.sample_shape()));
  }
  if (t.mode == TrainMode::cgan) {
    if (!dataset_.has_labels()) throw ConfigError("train.mode: cgan requires a labeled dataset");
    if (dataset_.num_classes() != t.num_clusters) {
      throw ConfigError("train.num_clusters: cgan mode needs K equal to the class count (" +
                        std::to_string(dataset_.num_classes()) + ")");
    }
  }
  batches_.seek(state_.data_position);
}

Batch Trainer::next_batch() {
  Batch b = batches_.next();
  state_.data_position = batches_.position();
  return b;
}

void Trainer::check_loss(double value, const char* what) const {
  if (!std::isfinite(value)) {
    throw DivergenceError(std::string("non-finite ") + what + " at iteration " +
                              std::to_string(state_.iteration),
                          state_.iteration);
  }
}

std::optional<Tensor> Trainer::real_condition(const Batch& real) {
  switch (state_.config.train.mode) {
    case TrainMode::ugan:
      return std::nullopt;
    case TrainMode::cgan:
      return onehot_from(*real.labels, state_.config.train.num_clusters);
    case TrainMode::slcgan: {
      NoGradGuard no_grad;
      return state_.clustering->forward(real.x, false).detach();
    }
  }
  return std::nullopt;
}

double Trainer::d_step(const Batch& real) {
  const auto& t = state_.config.train;
  const std::size_t n = real.x.dim(0);

  std::optional<Tensor> real_label = real_condition(real);
  Tensor fake;
  std::optional<Tensor> fake_label;
  {
    NoGradGuard no_grad;
    LatentCode z = sample_latent(n, state_.config.arch.latent_dim, state_.rng);
    if (t.mode != TrainMode::ugan) fake_label = sample_condition(n, t.num_clusters, state_.rng).onehot;
    fake = state_.generator.forward(z.values, fake_label, true).detach();
  }

  ParamSet params = state_.discriminator.parameters();
  zero_grad(params);
  losses::LossBreakdown parts;
  backprop_discriminator(state_.discriminator, real.x, real_label, fake, fake_label, t.lambdas, parts);
  check_loss(parts.d_hinge, "d_hinge");
  state_.opt_d.step();
  check_finite(params, "discriminator");
  return parts.d_hinge;
}

std::pair<double, double> Trainer::g_step() {
  const auto& t = state_.config.train;
  const std::size_t n = t.batch_size;

  LatentCode z = sample_latent(n, state_.config.arch.latent_dim, state_.rng);
  std::optional<Tensor> label;
  if (t.mode != TrainMode::ugan) label = sample_condition(n, t.num_clusters, state_.rng).onehot;

  ParamSet params = state_.generator.parameters();
  zero_grad(params);
  losses::LossBreakdown parts;
  ClusteringNet* clustering = t.mode == TrainMode::slcgan ? &*state_.clustering : nullptr;
  backprop_generator(state_.generator, state_.discriminator, clustering, z.values, label, t.lambdas, parts);
  check_loss(parts.g_adv, "g_adv");
  check_loss(parts.g_mi, "g_mi");
  state_.opt_g.step();
  check_finite(params, "generator");
  return {parts.g_adv, parts.g_mi};
}

std::pair<double, double> Trainer::c_step(const Batch& real) {
  const auto& t = state_.config.train;
  if (t.mode != TrainMode::slcgan) return {0.0, 0.0};
  ClusteringNet& net = *state_.clustering;

  Tensor augmented = augment(real.x, state_.config.aug, state_.rng);
  std::optional<std::pair<Tensor, Tensor>> mi_fakes;
  if (t.mi_updates_c) {
    NoGradGuard no_grad;
    LatentCode z = sample_latent(t.batch_size, state_.config.arch.latent_dim, state_.rng);
    ConditioningCode code = sample_condition(t.batch_size, t.num_clusters, state_.rng);
    mi_fakes.emplace(state_.generator.forward(z.values, code.onehot, false).detach(), code.onehot);
  }

  // The view's prediction is a fixed target: no gradient reaches it.
  Tensor view_probs;
  {
    NoGradGuard no_grad;
    view_probs = net.forward(augmented, true);
  }

  ParamSet params = net.parameters();
  zero_grad(params);
  losses::LossBreakdown parts;
  const double total =
      backprop_clustering(net, state_.discriminator, real.x, view_probs, mi_fakes, t.lambdas, parts);
  check_loss(parts.c_adv, "c_adv");
  check_loss(parts.c_aug, "c_aug");
  check_loss(total, "clustering objective");
  state_.opt_c->step();
  check_finite(params, "clustering");
  return {parts.c_adv, parts.c_aug};
}

MetricRow Trainer::step() {
  const auto& t = state_.config.train;
  MetricRow row;
  row.losses.weights = t.lambdas;
  for (std::size_t i = 0; i < t.d_steps_per_g; ++i) row.losses.d_hinge = d_step(next_batch());
  std::tie(row.losses.g_adv, row.losses.g_mi) = g_step();
  if (t.mode == TrainMode::slcgan) std::tie(row.losses.c_adv, row.losses.c_aug) = c_step(next_batch());
  row.iteration = ++state_.iteration;
  return row;
}

void Trainer::run(std::uint64_t target, const std::function<void(const MetricRow&)>& on_row,
                  const std::function<void(std::uint64_t)>& on_checkpoint) {
  const std::size_t every = state_.config.train.checkpoint_every;
  while (state_.iteration < target) {
    MetricRow row = step();
    if (on_row) on_row(row);
    if (on_checkpoint && every > 0 && row.iteration % every == 0 && row.iteration < target) {
      on_checkpoint(row.iteration);
    }
  }
}

// --------------------------------------------------------------- inference

Tensor generate(Generator& generator, const LatentCode& z, const std::optional<ConditioningCode>& c) {
  NoGradGuard no_grad;
  if (generator.arch().conditional && !c) throw ConfigError("generate: conditional generator needs a code");
  std::optional<Tensor> label;
  if (generator.arch().conditional) label = c->onehot;
  return generator.forward(z.values, label, false);
}

Tensor cluster_probabilities(ClusteringNet& net, const Tensor& x, std::size_t chunk) {
  NoGradGuard no_grad;
  const std::size_t n = x.dim(0);
  const std::size_t per = x.numel() / std::max<std::size_t>(n, 1);
  const std::size_t k = net.num_clusters();
  std::vector<double> out;
  out.reserve(n * k);
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    Shape shape = x.shape();
    shape[0] = end - begin;
    std::vector<double> part(x.data().begin() + static_cast<std::ptrdiff_t>(begin * per),
                             x.data().begin() + static_cast<std::ptrdiff_t>(end * per));
    Tensor probs = net.forward(Tensor::from(shape, std::move(part)), false);
    out.insert(out.end(), probs.data().begin(), probs.data().end());
  }
  return Tensor::from({n, k}, std::move(out));
}

}  // namespace slcgan
