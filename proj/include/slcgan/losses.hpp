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

#ifndef SLCGAN_LOSSES_HPP_
#define SLCGAN_LOSSES_HPP_

#include "slcgan/models.hpp"
#include "slcgan/tensor.hpp"

// Scalar objectives of the three-player game. All reductions are batch means
// and every function returns a differentiable scalar tensor.
namespace slcgan::losses {

inline constexpr double kProbEps = 1e-12;

// mean[max(0, 1 - u_r) + max(0, 1 - s_r) + max(0, 1 + u_f) + max(0, 1 + s_f)].
// When both joint scores are undefined (unconditional D) only the unary
// terms are summed.
Tensor d_hinge_loss(const ScorePair& real, const ScorePair& fake);

// mean[-u_f - s_f]; unary only for an unconditional D.
Tensor g_adv_loss(const ScorePair& fake);

// mean[-log p(y = c | G(z, c))] with p clamped at kProbEps.
Tensor mi_loss(const Tensor& fake_probs, const Tensor& cond_onehot);

// mean[sum_c -q_c log p_c]. q is detached: no gradient reaches the augmented
// branch.
Tensor aug_consistency_loss(const Tensor& p, const Tensor& q);

// mean[s_r].
Tensor c_adv_loss(const ScorePair& real);

struct LossWeights {
  double adv = 1.0;
  double mi = 1.0;
  double aug = 1.0;

  void validate() const;
};

struct LossBreakdown {
  double d_hinge = 0.0;
  double g_adv = 0.0;
  double g_mi = 0.0;
  double c_adv = 0.0;
  double c_aug = 0.0;
  LossWeights weights;
};

struct NetworkObjectives {
  double generator = 0.0;
  double clustering = 0.0;
  double discriminator = 0.0;
};

// G = adv * g_adv + mi * g_mi; C = adv * c_adv + aug * c_aug;
// D = adv * d_hinge.
NetworkObjectives combine(const LossBreakdown& breakdown);

}  // namespace slcgan::losses

#endif  // SLCGAN_LOSSES_HPP_
