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

#include "slcgan/losses.hpp"

#include "slcgan/errors.hpp"
#include "slcgan/ops.hpp"

namespace slcgan::losses {

namespace {

void require_batch(const Tensor& scores, const char* who) {
  if (!scores.defined() || scores.rank() != 1 || scores.dim(0) == 0) {
    throw ConfigError(std::string(who) + ": scores must be a non-empty [N] tensor");
  }
}

void require_probs(const Tensor& p, const char* who) {
  if (p.rank() != 2 || p.dim(0) == 0 || p.dim(1) == 0) {
    throw ConfigError(std::string(who) + ": probabilities must be a non-empty [N, K] tensor, got " +
                      shape_string(p.shape()));
  }
}

// max(0, 1 + sign * s)
Tensor margin(const Tensor& scores, double sign) {
  return ops::relu(ops::add_scalar(ops::scale(scores, sign), 1.0));
}

}  // namespace

Tensor d_hinge_loss(const ScorePair& real, const ScorePair& fake) {
  require_batch(real.unary, "d_hinge");
  require_batch(fake.unary, "d_hinge");
  if (real.unary.dim(0) != fake.unary.dim(0)) {
    throw ConfigError("d_hinge: real and fake batches differ in size");
  }
  if (real.joint.defined() != fake.joint.defined()) {
    throw ConfigError("d_hinge: joint scores must be present for both or neither batch");
  }
  Tensor per_sample = ops::add(margin(real.unary, -1.0), margin(fake.unary, 1.0));
  if (real.joint.defined()) {
    per_sample = ops::add(per_sample, ops::add(margin(real.joint, -1.0), margin(fake.joint, 1.0)));
  }
  return ops::mean(per_sample);
}

Tensor g_adv_loss(const ScorePair& fake) {
  require_batch(fake.unary, "g_adv");
  Tensor total = fake.joint.defined() ? ops::add(fake.unary, fake.joint) : fake.unary;
  return ops::scale(ops::mean(total), -1.0);
}

Tensor mi_loss(const Tensor& fake_probs, const Tensor& cond_onehot) {
  require_probs(fake_probs, "mi");
  if (cond_onehot.shape() != fake_probs.shape()) {
    throw ConfigError("mi: one-hot codes " + shape_string(cond_onehot.shape()) +
                      " do not match probabilities " + shape_string(fake_probs.shape()));
  }
  Tensor picked = ops::row_sum(ops::mul(cond_onehot.detach(), ops::clamped_log(fake_probs, kProbEps)));
  return ops::scale(ops::mean(picked), -1.0);
}

Tensor aug_consistency_loss(const Tensor& p, const Tensor& q) {
  require_probs(p, "aug");
  if (q.shape() != p.shape()) {
    throw ConfigError("aug: view probabilities " + shape_string(q.shape()) + " do not match " +
                      shape_string(p.shape()));
  }
  Tensor cross = ops::row_sum(ops::mul(q.detach(), ops::clamped_log(p, kProbEps)));
  return ops::scale(ops::mean(cross), -1.0);
}

Tensor c_adv_loss(const ScorePair& real) {
  require_batch(real.joint, "c_adv");
  return ops::mean(real.joint);
}

void LossWeights::validate() const {
  if (!(adv >= 0.0)) throw ConfigError("train.lambda_adv: must be non-negative");
  if (!(mi >= 0.0)) throw ConfigError("train.lambda_mi: must be non-negative");
  if (!(aug >= 0.0)) throw ConfigError("train.lambda_aug: must be non-negative");
}

NetworkObjectives combine(const LossBreakdown& b) {
  b.weights.validate();
  NetworkObjectives out;
  out.generator = b.weights.adv * b.g_adv + b.weights.mi * b.g_mi;
  out.clustering = b.weights.adv * b.c_adv + b.weights.aug * b.c_aug;
  out.discriminator = b.weights.adv * b.d_hinge;
  return out;
}

}  // namespace slcgan::losses
