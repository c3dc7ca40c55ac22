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

#include "slcgan/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "slcgan/errors.hpp"

namespace slcgan {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'L', 'C', 'G', 'A', 'N', 'C', 'K'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    out_.append(p, sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_ += s;
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    T value;
    take(&value, sizeof(T));
    return value;
  }
  void take(void* dst, std::size_t n) {
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (n > 0) {
    const auto piece = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), piece);
    data += piece;
    n -= piece;
  }
  return static_cast<std::uint32_t>(crc);
}

TensorRecord f64_record(std::string name, Shape shape, std::span<const double> values) {
  TensorRecord r;
  r.name = std::move(name);
  r.dtype = TensorRecord::Dtype::f64;
  r.shape = std::move(shape);
  r.f64.assign(values.begin(), values.end());
  return r;
}

TensorRecord u64_record(std::string name, std::vector<std::uint64_t> values) {
  TensorRecord r;
  r.name = std::move(name);
  r.dtype = TensorRecord::Dtype::u64;
  r.shape = {values.size()};
  r.u64 = std::move(values);
  return r;
}

void capture_network(ParamSet set, std::vector<TensorRecord>& out) {
  for (const auto& p : set.params) out.push_back(f64_record(p.name, p.tensor.shape(), p.tensor.data()));
  for (const auto& b : set.buffers) out.push_back(f64_record(b.name, {b.values->size()}, *b.values));
}

void capture_optimizer(const std::string& tag, const Adam& opt, std::vector<TensorRecord>& out) {
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back(f64_record("opt." + tag + ".m/" + params[i].name, params[i].tensor.shape(), opt.first_moment()[i]));
    out.push_back(f64_record("opt." + tag + ".v/" + params[i].name, params[i].tensor.shape(), opt.second_moment()[i]));
  }
  out.push_back(u64_record("opt." + tag + ".steps", {opt.steps()}));
}

// Consumes records by name and reports leftovers.
class RecordIndex {
 public:
  explicit RecordIndex(const std::vector<TensorRecord>& records) {
    for (const auto& r : records) {
      if (!index_.emplace(r.name, &r).second) throw CheckpointError("duplicate record " + r.name);
    }
  }

  const TensorRecord& take(const std::string& name, TensorRecord::Dtype dtype, std::size_t numel) {
    auto it = index_.find(name);
    if (it == index_.end()) throw CheckpointError("checkpoint is missing record " + name);
    const TensorRecord& r = *it->second;
    if (r.dtype != dtype) throw CheckpointError("record " + name + " has the wrong dtype");
    const std::size_t have = dtype == TensorRecord::Dtype::f64 ? r.f64.size() : r.u64.size();
    if (have != numel || shape_numel(r.shape) != numel) {
      throw CheckpointError("record " + name + " has shape " + shape_string(r.shape) + ", expected " +
                            std::to_string(numel) + " values");
    }
    index_.erase(it);
    return r;
  }

  void expect_empty() const {
    if (!index_.empty()) throw CheckpointError("checkpoint has unexpected record " + index_.begin()->first);
  }

 private:
  std::map<std::string, const TensorRecord*> index_;
};

void restore_network(ParamSet set, RecordIndex& index) {
  for (auto& p : set.params) {
    const auto& r = index.take(p.name, TensorRecord::Dtype::f64, p.tensor.numel());
    if (r.shape != p.tensor.shape()) throw CheckpointError("record " + p.name + " has the wrong shape");
    std::copy(r.f64.begin(), r.f64.end(), p.tensor.mutable_data().begin());
  }
  for (auto& b : set.buffers) {
    const auto& r = index.take(b.name, TensorRecord::Dtype::f64, b.values->size());
    *b.values = r.f64;
  }
}

void restore_optimizer(const std::string& tag, Adam& opt, RecordIndex& index) {
  const auto& params = opt.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i].tensor.numel();
    opt.first_moment()[i] = index.take("opt." + tag + ".m/" + params[i].name, TensorRecord::Dtype::f64, n).f64;
    opt.second_moment()[i] = index.take("opt." + tag + ".v/" + params[i].name, TensorRecord::Dtype::f64, n).f64;
  }
  opt.set_steps(index.take("opt." + tag + ".steps", TensorRecord::Dtype::u64, 1).u64[0]);
}

}  // namespace

const TensorRecord& CheckpointData::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return r;
  }
  throw CheckpointError("checkpoint has no record " + name);
}

std::string encode_checkpoint(const CheckpointData& data) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(data.version);
  w.put<std::uint64_t>(data.arch_hash);
  w.put<std::uint64_t>(data.iteration);
  w.put_string(data.config_text);
  w.put<std::uint64_t>(data.records.size());
  for (const auto& r : data.records) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.name.size()));
    w.put_bytes(r.name.data(), r.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(r.dtype));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) w.put<std::uint64_t>(d);
    const std::size_t numel = shape_numel(r.shape);
    if (r.dtype == TensorRecord::Dtype::f64) {
      if (r.f64.size() != numel) throw CheckpointError("record " + r.name + " size does not match its shape");
      w.put_bytes(r.f64.data(), numel * sizeof(double));
    } else {
      if (r.u64.size() != numel) throw CheckpointError("record " + r.name + " size does not match its shape");
      w.put_bytes(r.u64.data(), numel * sizeof(std::uint64_t));
    }
  }
  w.put_string(data.rng_state);
  const std::uint32_t crc = crc_of(w.bytes().data(), w.bytes().size());
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

CheckpointData decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) * 2) throw CheckpointError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw CheckpointError("not a checkpoint file");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint32_t);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (crc_of(bytes.data(), body) != stored) throw CheckpointError("checkpoint checksum mismatch (corrupt or truncated)");

  Reader r(bytes, body);
  char magic[sizeof(kMagic)];
  r.take(magic, sizeof(magic));
  CheckpointData data;
  data.version = r.get<std::uint32_t>();
  data.arch_hash = r.get<std::uint64_t>();
  data.iteration = r.get<std::uint64_t>();
  data.config_text = r.get_string();
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    TensorRecord rec;
    const auto name_len = r.get<std::uint32_t>();
    rec.name.resize(name_len);
    r.take(rec.name.data(), name_len);
    const auto dtype = r.get<std::uint8_t>();
    if (dtype > 1) throw CheckpointError("record " + rec.name + " has unknown dtype");
    rec.dtype = static_cast<TensorRecord::Dtype>(dtype);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw CheckpointError("record " + rec.name + " has implausible rank");
    for (std::uint32_t d = 0; d < rank; ++d) rec.shape.push_back(r.get<std::uint64_t>());
    const std::size_t numel = shape_numel(rec.shape);
    if (numel > body / 8) throw CheckpointError("checkpoint truncated");
    if (rec.dtype == TensorRecord::Dtype::f64) {
      rec.f64.resize(numel);
      r.take(rec.f64.data(), numel * sizeof(double));
    } else {
      rec.u64.resize(numel);
      r.take(rec.u64.data(), numel * sizeof(std::uint64_t));
    }
    data.records.push_back(std::move(rec));
  }
  data.rng_state = r.get_string();
  if (r.position() != body) throw CheckpointError("checkpoint has trailing bytes");
  return data;
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointData& data) {
  const std::string bytes = encode_checkpoint(data);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

std::uint64_t arch_hash(const ArchConfig& arch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : arch.canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CheckpointData capture_state(TrainState& state) {
  CheckpointData data;
  data.arch_hash = arch_hash(state.config.arch);
  data.iteration = state.iteration;
  data.config_text = state.config.to_text(false);
  capture_network(state.generator.parameters(), data.records);
  capture_network(state.discriminator.parameters(), data.records);
  if (state.clustering) capture_network(state.clustering->parameters(), data.records);
  capture_optimizer("g", state.opt_g, data.records);
  capture_optimizer("d", state.opt_d, data.records);
  if (state.opt_c) capture_optimizer("c", *state.opt_c, data.records);
  data.records.push_back(u64_record("state.data_position", {state.data_position.epoch, state.data_position.cursor}));
  data.rng_state = state.rng.serialize();
  return data;
}

std::unique_ptr<TrainState> restore_state(const CheckpointData& data) {
  RunConfig config;
  try {
    config = RunConfig::parse(data.config_text);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  }
  if (arch_hash(config.arch) != data.arch_hash) throw CheckpointError("checkpoint architecture hash mismatch");
  auto state = TrainState::initialize(config);
  RecordIndex index(data.records);
  restore_network(state->generator.parameters(), index);
  restore_network(state->discriminator.parameters(), index);
  if (state->clustering) restore_network(state->clustering->parameters(), index);
  restore_optimizer("g", state->opt_g, index);
  restore_optimizer("d", state->opt_d, index);
  if (state->opt_c) restore_optimizer("c", *state->opt_c, index);
  const auto& pos = index.take("state.data_position", TensorRecord::Dtype::u64, 2);
  state->data_position = {pos.u64[0], pos.u64[1]};
  index.expect_empty();
  state->iteration = data.iteration;
  state->rng.deserialize(data.rng_state);
  return state;
}

void save_checkpoint(TrainState& state, const std::filesystem::path& path) {
  write_checkpoint_file(path, capture_state(state));
}

std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& path) {
  return restore_state(read_checkpoint_file(path));
}

}  // namespace slcgan
