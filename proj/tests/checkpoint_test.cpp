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


#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "slcgan/checkpoint.hpp"
#include "slcgan/errors.hpp"
#include "slcgan/trainer.hpp"
#include "test_util.hpp"

namespace slcgan {
namespace {

using testing::tiny_config;

CheckpointData sample_data() {
  CheckpointData d;
  d.arch_hash = 0x1234;
  d.iteration = 77;
  d.config_text = "train.seed = 3\n";
  TensorRecord f;
  f.name = "w";
  f.shape = {2, 2};
  f.f64 = {1.0, -2.5, 1e-300, 3.0};
  TensorRecord u;
  u.name = "pos";
  u.dtype = TensorRecord::Dtype::u64;
  u.shape = {2};
  u.u64 = {5, 0xffffffffffffffffULL};
  d.records = {f, u};
  d.rng_state = "opaque state";
  return d;
}

std::string expect_error(const std::string& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.what();
  }
  return "";
}

TEST(CheckpointFormatTest, EncodeDecodeRoundTrip) {
  CheckpointData d = sample_data();
  const std::string bytes = encode_checkpoint(d);
  EXPECT_EQ(bytes.substr(0, 8), "SLCGANCK");
  EXPECT_EQ(decode_checkpoint(bytes), d);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
  EXPECT_EQ(d.find("pos").u64[1], 0xffffffffffffffffULL);
  EXPECT_THROW(d.find("nope"), CheckpointError);
}

TEST(CheckpointFormatTest, EveryFlippedByteIsDetected) {
  const std::string bytes = encode_checkpoint(sample_data());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::string bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x01);
    EXPECT_NE(expect_error(bad), "") << "byte " << i;
  }
}

TEST(CheckpointFormatTest, TruncationAndGarbage) {
  const std::string bytes = encode_checkpoint(sample_data());
  for (std::size_t n : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_NE(expect_error(bytes.substr(0, n)), "") << n;
  }
  EXPECT_EQ(expect_error("NOTACKPT" + bytes.substr(8)), "not a checkpoint file");
}

TEST(CheckpointFormatTest, VersionMismatchIsNamed) {
  std::string bytes = encode_checkpoint(sample_data());
  const std::uint32_t future = kCheckpointVersion + 1;
  std::memcpy(bytes.data() + 8, &future, sizeof(future));
  EXPECT_NE(expect_error(bytes).find("version"), std::string::npos);
}

TEST(CheckpointFormatTest, FileWriteIsAtomicAndReadable) {
  auto dir = testing::scratch_dir("ckpt_file");
  write_checkpoint_file(dir / "sub" / "a.ck", sample_data());
  EXPECT_EQ(read_checkpoint_file(dir / "sub" / "a.ck"), sample_data());
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir / "sub")) ++files;
  EXPECT_EQ(files, 1u);
  EXPECT_THROW(read_checkpoint_file(dir / "missing.ck"), CheckpointError);
}

TEST(CheckpointStateTest, CaptureRestoreIsExact) {
  RunConfig c = tiny_config(TrainMode::slcgan, 21);
  auto s = TrainState::initialize(c);
  Dataset data = Dataset::from_gmm(c.data.gmm, c.data.size, c.data.seed);
  Trainer(*s, data).run(7);
  CheckpointData captured = capture_state(*s);
  auto r = restore_state(captured);
  EXPECT_EQ(r->iteration, 7u);
  EXPECT_TRUE(r->rng == s->rng);
  EXPECT_EQ(r->data_position.epoch, s->data_position.epoch);
  EXPECT_EQ(r->data_position.cursor, s->data_position.cursor);
  EXPECT_EQ(parameter_hash(r->generator.parameters()), parameter_hash(s->generator.parameters()));
  EXPECT_EQ(parameter_hash(r->clustering->parameters()), parameter_hash(s->clustering->parameters()));
  EXPECT_EQ(r->opt_d.first_moment(), s->opt_d.first_moment());
  EXPECT_EQ(r->opt_c->second_moment(), s->opt_c->second_moment());
  EXPECT_EQ(r->opt_g.steps(), s->opt_g.steps());
  // Buffers (spectral vectors) come back too: a second capture is identical.
  EXPECT_EQ(encode_checkpoint(capture_state(*r)), encode_checkpoint(captured));
}

TEST(CheckpointStateTest, ResumeMidRunIsBitIdentical) {
  RunConfig c = tiny_config(TrainMode::slcgan, 22);
  Dataset data = Dataset::from_gmm(c.data.gmm, c.data.size, c.data.seed);
  auto straight = TrainState::initialize(c);
  std::vector<std::string> straight_rows;
  Trainer(*straight, data).run(50, [&](const MetricRow& r) { straight_rows.push_back(metrics_csv_row(r)); });

  auto dir = testing::scratch_dir("ckpt_resume");
  std::vector<std::string> resumed_rows;
  {
    auto first = TrainState::initialize(c);
    Trainer(*first, data).run(25, [&](const MetricRow& r) { resumed_rows.push_back(metrics_csv_row(r)); });
    save_checkpoint(*first, dir / "mid.ck");
  }
  auto second = load_checkpoint(dir / "mid.ck");
  Trainer(*second, data).run(50, [&](const MetricRow& r) { resumed_rows.push_back(metrics_csv_row(r)); });
  EXPECT_EQ(resumed_rows, straight_rows);
  EXPECT_EQ(encode_checkpoint(capture_state(*second)), encode_checkpoint(capture_state(*straight)));
}

TEST(CheckpointStateTest, MismatchedRecordsAreRejected) {
  RunConfig c = tiny_config(TrainMode::slcgan, 23);
  auto s = TrainState::initialize(c);
  CheckpointData d = capture_state(*s);

  CheckpointData missing = d;
  missing.records.pop_back();
  EXPECT_THROW(restore_state(missing), CheckpointError);

  CheckpointData extra = d;
  TensorRecord bogus;
  bogus.name = "bogus";
  bogus.shape = {1};
  bogus.f64 = {0.0};
  extra.records.push_back(bogus);
  EXPECT_THROW(restore_state(extra), CheckpointError);

  CheckpointData other_arch = d;
  other_arch.arch_hash ^= 1;
  EXPECT_THROW(restore_state(other_arch), CheckpointError);
}

TEST(CheckpointStateTest, ArchHashFollowsArchitecture) {
  RunConfig a = tiny_config(TrainMode::slcgan, 1), b = tiny_config(TrainMode::slcgan, 2);
  EXPECT_EQ(arch_hash(a.arch), arch_hash(b.arch));
  b.arch.hidden += 1;
  EXPECT_NE(arch_hash(a.arch), arch_hash(b.arch));
}

}  // namespace
}  // namespace slcgan
