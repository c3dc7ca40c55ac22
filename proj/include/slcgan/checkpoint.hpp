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

#ifndef SLCGAN_CHECKPOINT_HPP_
#define SLCGAN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "slcgan/tensor.hpp"
#include "slcgan/trainer.hpp"

// Binary container layout (all integers little-endian):
//   "SLCGANCK" | u32 version | u64 arch hash | u64 iteration
//   | u64 len + config text | u64 record count | records
//   | u64 len + rng state | u32 crc32 of everything before it
// Record: u32 len + name | u8 dtype (0 f64, 1 u64) | u32 rank | u64 dims[rank]
//   | raw data.
namespace slcgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  enum class Dtype : std::uint8_t { f64 = 0, u64 = 1 };

  std::string name;
  Dtype dtype = Dtype::f64;
  Shape shape;
  std::vector<double> f64;
  std::vector<std::uint64_t> u64;

  bool operator==(const TensorRecord&) const = default;
};

struct CheckpointData {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t arch_hash = 0;
  std::uint64_t iteration = 0;
  std::string config_text;
  std::vector<TensorRecord> records;
  std::string rng_state;

  // Throws CheckpointError when absent.
  const TensorRecord& find(const std::string& name) const;
  bool operator==(const CheckpointData&) const = default;
};

std::string encode_checkpoint(const CheckpointData& data);
// Throws CheckpointError on bad magic, version mismatch, truncation or a
// checksum mismatch.
CheckpointData decode_checkpoint(const std::string& bytes);

// Writes through a temporary file and renames it into place.
void write_checkpoint_file(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint_file(const std::filesystem::path& path);

// FNV-1a of the canonical architecture text.
std::uint64_t arch_hash(const ArchConfig& arch);

CheckpointData capture_state(TrainState& state);
// Rebuilds the state from the embedded config, then restores every record.
// Missing, extra or misshapen records are errors.
std::unique_ptr<TrainState> restore_state(const CheckpointData& data);

void save_checkpoint(TrainState& state, const std::filesystem::path& path);
std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& path);

}  // namespace slcgan

#endif  // SLCGAN_CHECKPOINT_HPP_
