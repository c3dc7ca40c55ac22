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
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "slcgan/errors.hpp"
#include "slcgan/image_io.hpp"
#include "slcgan/rng.hpp"
#include "slcgan/sampling.hpp"
#include "test_util.hpp"

namespace slcgan {
namespace {

TEST(RngTest, SerializeRestoresTheStream) {
  Rng a(42);
  a.normal();  // leave a cached Box-Muller value behind
  Rng b(0);
  b.deserialize(a.serialize());
  EXPECT_TRUE(a == b);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.normal(), b.normal());
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngTest, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0x10), derive_seed(1, 0x11));
  EXPECT_NE(derive_seed(1, 0x10), derive_seed(2, 0x10));
  EXPECT_EQ(derive_seed(3, 7), derive_seed(3, 7));
}

TEST(PriorsTest, LatentAndConditionShapes) {
  Rng rng(1);
  LatentCode z = sample_latent(500, 4, rng);
  EXPECT_EQ(z.values.shape(), (Shape{500, 4}));
  double mean = 0.0;
  for (double v : z.values.data()) mean += v / 2000.0;
  EXPECT_NEAR(mean, 0.0, 0.1);

  ConditioningCode c = sample_condition(300, 5, rng);
  std::set<int> seen(c.index.begin(), c.index.end());
  EXPECT_EQ(seen.size(), 5u);
  for (std::size_t i = 0; i < 300; ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < 5; ++k) row += c.onehot.at(i * 5 + k);
    EXPECT_EQ(row, 1.0);
    EXPECT_EQ(c.onehot.at(i * 5 + static_cast<std::size_t>(c.index[i])), 1.0);
  }
  EXPECT_THROW(make_condition({3}, 3), ConfigError);
  EXPECT_THROW(sample_latent(0, 4, rng), ConfigError);
}

TEST(AugmentTest, IdentityPolicyLeavesInputsUntouched) {
  Rng rng(2);
  std::mt19937_64 gen(2);
  // Images live in [-1, 1]; augmentation clamps to that range.
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> pixels(3 * 3 * 8 * 8);
  for (auto& v : pixels) v = unit(gen);
  Tensor images = Tensor::from({3, 3, 8, 8}, pixels);
  Tensor points = testing::random_tensor({5, 2}, gen);
  for (const Tensor& x : {images, points}) {
    Tensor y = augment(x, AugmentationPolicy::identity(), rng);
    ASSERT_EQ(y.shape(), x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(y.at(i), x.at(i));
  }
}

TEST(AugmentTest, DefaultPolicyChangesImagesAndKeepsShape) {
  Rng a(3), b(3);
  std::mt19937_64 gen(3);
  Tensor x = testing::random_tensor({2, 3, 8, 8}, gen, 0.5);
  Tensor ya = augment(x, AugmentationPolicy{}, a), yb = augment(x, AugmentationPolicy{}, b);
  ASSERT_EQ(ya.shape(), x.shape());
  double diff = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    diff += std::abs(ya.at(i) - x.at(i));
    EXPECT_EQ(ya.at(i), yb.at(i));
  }
  EXPECT_GT(diff, 0.0);
}

TEST(AugmentTest, PointNoiseHasTheConfiguredScale) {
  Rng rng(4);
  AugmentationPolicy policy = AugmentationPolicy::identity();
  policy.point_noise = 0.15;
  Tensor x = Tensor::zeros({4000, 2});
  Tensor y = augment(x, policy, rng);
  double var = 0.0;
  for (double v : y.data()) var += v * v / 8000.0;
  EXPECT_NEAR(std::sqrt(var), 0.15, 0.005);
}

TEST(AugmentTest, PolicyValidation) {
  AugmentationPolicy p;
  p.crop_low = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.hflip_prob = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(GaussianMixtureTest, RingGeometryAndSampling) {
  GaussianMixtureSpec spec = GaussianMixtureSpec::ring(8, 1.0, 0.05);
  ASSERT_EQ(spec.centers.size(), 8u);
  for (const auto& c : spec.centers) EXPECT_NEAR(std::hypot(c[0], c[1]), 1.0, 1e-12);
  Rng rng(5);
  PointSample s = gmm_sample(spec, 8000, rng);
  std::vector<int> counts(8, 0);
  for (std::size_t i = 0; i < 8000; ++i) {
    const auto& c = spec.centers[static_cast<std::size_t>(s.labels[i])];
    EXPECT_LT(std::hypot(s.points.at(2 * i) - c[0], s.points.at(2 * i + 1) - c[1]), 0.05 * 6);
    ++counts[static_cast<std::size_t>(s.labels[i])];
  }
  for (int n : counts) EXPECT_NEAR(n, 1000, 150);
}

TEST(GaussianMixtureTest, WeightsAreHonored) {
  GaussianMixtureSpec spec = GaussianMixtureSpec::ring(2, 1.0, 0.05);
  spec.weights = {0.9, 0.1};
  Rng rng(6);
  PointSample s = gmm_sample(spec, 5000, rng);
  double first = 0.0;
  for (int y : s.labels) first += y == 0 ? 1.0 / 5000.0 : 0.0;
  EXPECT_NEAR(first, 0.9, 0.02);
  spec.weights = {0.5, 0.6};
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(DatasetTest, GmmDatasetIsSeeded) {
  GaussianMixtureSpec spec = GaussianMixtureSpec::ring(8, 1.0, 0.05);
  Dataset a = Dataset::from_gmm(spec, 100, 9), b = Dataset::from_gmm(spec, 100, 9);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a.num_classes(), 8u);
  EXPECT_EQ(a.labels(), b.labels());
  Tensor sa = a.slice(0, 100), sb = b.slice(0, 100);
  for (std::size_t i = 0; i < sa.numel(); ++i) EXPECT_EQ(sa.at(i), sb.at(i));
}

TEST(BatchIteratorTest, EpochsVisitEverySampleOnce) {
  std::vector<double> values(10);
  for (int i = 0; i < 10; ++i) values[static_cast<std::size_t>(i)] = i;
  Dataset ds({1}, values, std::nullopt, {});
  BatchIterator it(ds, 3, 11);
  EXPECT_EQ(it.batches_per_epoch(), 3u);
  std::multiset<double> seen;
  for (int b = 0; b < 3; ++b) {
    Batch batch = it.next();
    for (double v : batch.x.data()) seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 9u);
  EXPECT_EQ(std::set<double>(seen.begin(), seen.end()).size(), 9u);
  EXPECT_EQ(it.position().epoch, 1u);
  EXPECT_EQ(it.position().cursor, 0u);
}

TEST(BatchIteratorTest, SeekAndPrefetchReproduceTheSequence) {
  GaussianMixtureSpec spec = GaussianMixtureSpec::ring(4, 1.0, 0.05);
  Dataset ds = Dataset::from_gmm(spec, 40, 1);
  BatchIterator plain(ds, 8, 5), prefetched(ds, 8, 5, true);
  std::vector<Batch> reference;
  for (int i = 0; i < 12; ++i) {
    reference.push_back(plain.next());
    Batch other = prefetched.next();
    for (std::size_t j = 0; j < other.x.numel(); ++j) ASSERT_EQ(other.x.at(j), reference.back().x.at(j));
    EXPECT_EQ(*other.labels, *reference.back().labels);
  }
  BatchIterator resumed(ds, 8, 5);
  resumed.seek({1, 2});  // batch 7
  Batch b = resumed.next();
  for (std::size_t j = 0; j < b.x.numel(); ++j) EXPECT_EQ(b.x.at(j), reference[7].x.at(j));
  EXPECT_THROW(resumed.seek({0, 5}), CheckpointError);
  EXPECT_THROW(BatchIterator(ds, 41, 0), ConfigError);
}

TEST(ImageIoTest, ToByteMapsRangeWithHalfEvenRounding) {
  EXPECT_EQ(to_byte(-1.0), 0);
  EXPECT_EQ(to_byte(1.0), 255);
  EXPECT_EQ(to_byte(-5.0), 0);
  EXPECT_EQ(to_byte(3.0), 255);
  // (v + 1) / 2 * 255 = 127.5 exactly; the tie goes to the even 128.
  EXPECT_EQ(to_byte(0.0), 128);
  EXPECT_EQ(to_byte(-0.5), 64);  // 63.75
  EXPECT_EQ(to_byte(0.5), 191);  // 191.25
}

TEST(ImageIoTest, GridLayoutArithmetic) {
  const std::size_t rows = 3, cols = 8, side = 32;
  std::vector<double> images(rows * cols * 3 * side * side, 1.0);
  Raster grid = tile_grid(images, rows * cols, 3, side, side, rows, cols, 2);
  EXPECT_EQ(grid.height, 3u * 32 + 4 * 2);
  EXPECT_EQ(grid.width, 8u * 32 + 9 * 2);
  EXPECT_EQ(grid.channels, 3u);
  // Padding is mid-gray, tiles are white.
  EXPECT_EQ(grid.pixels[0], 128);
  EXPECT_EQ(grid.pixels[(2 * grid.width + 2) * 3], 255);
  EXPECT_EQ(grid.pixels[(34 * grid.width + 2) * 3], 128);
  EXPECT_THROW(tile_grid(images, 25, 3, side, side, rows, cols), ConfigError);
}

TEST(ImageIoTest, PngRoundTripAndImageDirIngestion) {
  auto dir = testing::scratch_dir("image_dir");
  const std::size_t side = 4;
  for (int cls = 0; cls < 2; ++cls) {
    for (int i = 0; i < 3; ++i) {
      Raster r{3, side, side, std::vector<std::uint8_t>(side * side * 3)};
      for (std::size_t p = 0; p < r.pixels.size(); ++p) r.pixels[p] = static_cast<std::uint8_t>(cls * 100 + i * 10 + p % 3);
      write_png(dir / ("class" + std::to_string(cls)) / ("img" + std::to_string(i) + ".png"), r);
    }
  }
  DecodedImage img = read_image(dir / "class1" / "img2.png");
  EXPECT_EQ(img.channels, 3u);
  EXPECT_EQ(img.height, side);
  // Channel-first layout; first pixel is (120, 121, 122).
  EXPECT_NEAR(img.values[0], 120.0 / 255.0, 1e-12);
  EXPECT_NEAR(img.values[side * side], 121.0 / 255.0, 1e-12);

  Dataset ds = Dataset::from_image_dir(dir);
  EXPECT_EQ(ds.size(), 6u);
  EXPECT_EQ(ds.sample_shape(), (Shape{3, side, side}));
  ASSERT_TRUE(ds.has_labels());
  EXPECT_EQ(ds.class_names(), (std::vector<std::string>{"class0", "class1"}));
  EXPECT_EQ(ds.labels(), (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_NEAR(ds.slice(5, 6).at(0), 120.0 / 255.0 * 2.0 - 1.0, 1e-12);

  EXPECT_THROW(Dataset::from_image_dir(dir / "missing"), IngestionError);
  Raster odd{1, 5, 5, std::vector<std::uint8_t>(25, 0)};
  write_png(dir / "class1" / "odd.png", odd);
  EXPECT_THROW(Dataset::from_image_dir(dir), IngestionError);
}

}  // namespace
}  // namespace slcgan
