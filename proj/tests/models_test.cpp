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


#include <cmath>
#include <optional>
#include <random>

#include "gtest/gtest.h"
#include "slcgan/errors.hpp"
#include "slcgan/models.hpp"
#include "slcgan/rng.hpp"
#include "test_util.hpp"

namespace slcgan {
namespace {

using testing::random_onehot;
using testing::random_tensor;

ArchConfig small_conv(bool conditional) {
  ArchConfig arch = ArchConfig::defaults(Family::conv);
  arch.channels = 4;
  arch.image_size = 8;
  arch.image_channels = 1;
  arch.latent_dim = 6;
  arch.embed_dim = 5;
  arch.penultimate = 7;
  arch.num_clusters = 3;
  arch.conditional = conditional;
  return arch;
}

ArchConfig small_mlp(bool conditional) {
  ArchConfig arch = ArchConfig::defaults(Family::mlp);
  arch.num_clusters = 4;
  arch.hidden = 16;
  arch.conditional = conditional;
  return arch;
}

TEST(ModelsTest, MlpShapes) {
  Rng rng(1);
  std::mt19937_64 gen(1);
  ArchConfig arch = small_mlp(true);
  Generator g(arch, rng);
  Discriminator d(arch, rng);
  ClusteringNet c(arch, rng);
  Tensor label = random_onehot(5, 4, gen);
  Tensor x = g.forward(random_tensor({5, arch.latent_dim}, gen), label, true);
  EXPECT_EQ(x.shape(), (Shape{5, 2}));
  ScorePair s = d.forward(x, label, true);
  EXPECT_EQ(s.unary.shape(), (Shape{5}));
  EXPECT_EQ(s.joint.shape(), (Shape{5}));
  Tensor p = c.forward(x, true);
  EXPECT_EQ(p.shape(), (Shape{5, 4}));
  EXPECT_EQ(c.features(x, false).shape(), (Shape{5, arch.penultimate}));
  for (std::size_t i = 0; i < 5; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += p.at(i * 4 + k);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(ModelsTest, GeneratorOutputBoundedByScale) {
  Rng rng(2);
  std::mt19937_64 gen(2);
  ArchConfig arch = small_mlp(false);
  arch.output_scale = 1.5;
  Generator g(arch, rng);
  Tensor x = g.forward(random_tensor({64, arch.latent_dim}, gen, 10.0), std::nullopt, true);
  for (double v : x.data()) EXPECT_LE(std::abs(v), 1.5);
}

TEST(ModelsTest, ConvShapes) {
  Rng rng(3);
  std::mt19937_64 gen(3);
  ArchConfig arch = small_conv(true);
  Generator g(arch, rng);
  Discriminator d(arch, rng);
  ClusteringNet c(arch, rng);
  Tensor label = random_onehot(2, 3, gen);
  Tensor x = g.forward(random_tensor({2, 6}, gen), label, true);
  EXPECT_EQ(x.shape(), (Shape{2, 1, 8, 8}));
  for (double v : x.data()) EXPECT_LE(std::abs(v), 1.0);
  EXPECT_EQ(d.forward(x, label, true).joint.shape(), (Shape{2}));
  EXPECT_EQ(c.forward(x, true).shape(), (Shape{2, 3}));
  EXPECT_EQ(c.features(x, true).shape(), (Shape{2, 7}));
}

TEST(ModelsTest, UnconditionalDiscriminatorHasNoJointScore) {
  Rng rng(4);
  std::mt19937_64 gen(4);
  ArchConfig arch = small_mlp(false);
  Discriminator d(arch, rng);
  ScorePair s = d.forward(random_tensor({3, 2}, gen), random_onehot(3, 4, gen), true);
  EXPECT_TRUE(s.unary.defined());
  EXPECT_FALSE(s.joint.defined());
  EXPECT_EQ(d.label_embedding_calls(), 0u);
}

TEST(ModelsTest, ZeroLabelJointEqualsUnary) {
  Rng rng(5);
  std::mt19937_64 gen(5);
  ArchConfig arch = small_mlp(true);
  Discriminator d(arch, rng);
  ScorePair s = d.forward(random_tensor({4, 2}, gen), Tensor::zeros({4, 4}), false);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s.joint.at(i), s.unary.at(i));
}

TEST(ModelsTest, JointScoreIsLinearInTheLabel) {
  // Projection conditioning: s(x, a y1 + b y2) - u = a (s(x, y1) - u) + b (s(x, y2) - u).
  Rng rng(6);
  std::mt19937_64 gen(6);
  ArchConfig arch = small_mlp(true);
  Discriminator d(arch, rng);
  Tensor x = random_tensor({3, 2}, gen);
  Tensor y1 = random_onehot(3, 4, gen), y2 = random_onehot(3, 4, gen);
  std::vector<double> mixed(12);
  for (std::size_t i = 0; i < 12; ++i) mixed[i] = 0.3 * y1.at(i) + 0.7 * y2.at(i);
  ScorePair s1 = d.forward(x, y1, false), s2 = d.forward(x, y2, false);
  ScorePair sm = d.forward(x, Tensor::from({3, 4}, mixed), false);
  for (std::size_t i = 0; i < 3; ++i) {
    const double u = sm.unary.at(i);
    EXPECT_NEAR(sm.joint.at(i) - u, 0.3 * (s1.joint.at(i) - u) + 0.7 * (s2.joint.at(i) - u), 1e-12);
  }
}

TEST(ModelsTest, ConditionalGeneratorNeedsLabel) {
  Rng rng(7);
  std::mt19937_64 gen(7);
  Generator g(small_mlp(true), rng);
  EXPECT_THROW(g.forward(random_tensor({2, 8}, gen), std::nullopt, true), ConfigError);
  EXPECT_THROW(g.forward(random_tensor({2, 8}, gen), Tensor::zeros({2, 5}), true), ConfigError);
  EXPECT_THROW(g.forward(random_tensor({2, 3}, gen), Tensor::zeros({2, 4}), true), ConfigError);
}

TEST(ModelsTest, InstrumentationCounters) {
  Rng rng(8);
  std::mt19937_64 gen(8);
  ArchConfig arch = small_mlp(true);
  Generator g(arch, rng);
  Discriminator d(arch, rng);
  ClusteringNet c(arch, rng);
  const auto forwards = instrumentation::clustering_forwards();
  const auto embeddings = instrumentation::label_embeddings();
  Tensor label = random_onehot(2, 4, gen);
  Tensor x = g.forward(random_tensor({2, 8}, gen), label, true);
  d.forward(x, label, true);
  d.forward(x, std::nullopt, true);
  c.forward(x, false);
  c.logits(x, false);
  EXPECT_EQ(g.label_embedding_calls(), 1u);
  EXPECT_EQ(d.label_embedding_calls(), 1u);
  EXPECT_EQ(c.forward_calls(), 2u);
  EXPECT_EQ(instrumentation::clustering_forwards() - forwards, 2u);
  EXPECT_EQ(instrumentation::label_embeddings() - embeddings, 2u);
}

TEST(ModelsTest, ParameterHashTracksValuesNotBuffers) {
  Rng rng(9);
  Discriminator d(small_mlp(true), rng);
  ParamSet set = d.parameters();
  const auto h0 = parameter_hash(set);
  EXPECT_EQ(parameter_hash(d.parameters()), h0);
  ASSERT_FALSE(set.buffers.empty());
  (*set.buffers[0].values)[0] += 1.0;
  EXPECT_EQ(parameter_hash(set), h0);
  double& first = set.params[0].tensor.mutable_data()[0];
  first = std::nextafter(first, 10.0);
  EXPECT_NE(parameter_hash(set), h0);
}

TEST(ModelsTest, SameSeedSameInitialization) {
  Rng a(10), b(10);
  ArchConfig arch = small_conv(true);
  Generator ga(arch, a), gb(arch, b);
  EXPECT_EQ(parameter_hash(ga.parameters()), parameter_hash(gb.parameters()));
}

TEST(ModelsTest, CheckFiniteAndFreezing) {
  Rng rng(11);
  ClusteringNet c(small_mlp(true), rng);
  ParamSet set = c.parameters();
  EXPECT_NO_THROW(check_finite(set, "c"));
  set_requires_grad(set, false);
  for (const auto& p : set.params) EXPECT_FALSE(p.tensor.requires_grad());
  set_requires_grad(set, true);
  set.params[1].tensor.mutable_data()[0] = std::nan("");
  EXPECT_THROW(check_finite(set, "c"), NumericError);
}

TEST(ModelsTest, ArchValidation) {
  ArchConfig arch = small_conv(true);
  arch.image_size = 12;
  EXPECT_THROW(arch.validate(), ConfigError);
  arch = small_mlp(true);
  arch.hidden = 0;
  EXPECT_THROW(arch.validate(), ConfigError);
  arch = small_conv(true);
  arch.backbone = ClusterBackbone::resnet18;
  EXPECT_THROW(arch.validate(), ConfigError);
  arch.penultimate = 512;
  EXPECT_NO_THROW(arch.validate());
}

TEST(ModelsTest, CanonicalTextDistinguishesArchitectures) {
  ArchConfig a = small_mlp(true), b = small_mlp(true);
  EXPECT_EQ(a.canonical(), b.canonical());
  b.hidden = 17;
  EXPECT_NE(a.canonical(), b.canonical());
}

}  // namespace
}  // namespace slcgan
