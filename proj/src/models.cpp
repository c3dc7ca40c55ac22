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

#include "slcgan/models.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>

#include "slcgan/errors.hpp"

namespace slcgan {

namespace {

std::atomic<std::uint64_t> g_clustering_forwards{0};
std::atomic<std::uint64_t> g_label_embeddings{0};

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void require_label(const Tensor& label, std::size_t batch, std::size_t k, const char* who) {
  if (label.rank() != 2 || label.dim(1) != k) {
    throw ConfigError(std::string(who) + ": label must be [N, " + std::to_string(k) + "], got " +
                      shape_string(label.shape()));
  }
  if (label.dim(0) != batch) {
    throw ConfigError(std::string(who) + ": label batch " + std::to_string(label.dim(0)) +
                      " does not match input batch " + std::to_string(batch));
  }
}

void require_input(const Tensor& x, const ArchConfig& arch, const char* who) {
  Shape expected{x.rank() ? x.dim(0) : 0};
  for (auto d : arch.sample_shape()) expected.push_back(d);
  if (x.shape() != expected) {
    throw ConfigError(std::string(who) + ": expected input " + shape_string(expected) + ", got " +
                      shape_string(x.shape()));
  }
}

}  // namespace

std::string to_string(Family family) { return family == Family::mlp ? "mlp" : "conv"; }

std::string to_string(ClusterBackbone backbone) {
  return backbone == ClusterBackbone::small ? "small" : "resnet18";
}

ArchConfig ArchConfig::defaults(Family family) {
  ArchConfig arch;
  arch.family = family;
  if (family == Family::conv) {
    arch.latent_dim = 128;
    arch.embed_dim = 128;
    arch.penultimate = 128;
  }
  return arch;
}

void ArchConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("arch." + field + ": " + why);
  };
  if (latent_dim == 0) fail("latent_dim", "must be positive");
  if (num_clusters == 0) fail("num_clusters", "must be positive");
  if (embed_dim == 0) fail("embed_dim", "must be positive");
  if (penultimate == 0) fail("penultimate", "must be positive");
  if (family == Family::mlp) {
    if (data_dim == 0) fail("data_dim", "must be positive");
    if (hidden == 0) fail("hidden", "must be positive");
    if (c_hidden == 0) fail("c_hidden", "must be positive");
    if (!(output_scale > 0.0)) fail("output_scale", "must be positive");
  } else {
    if (channels == 0) fail("channels", "must be positive");
    if (image_channels == 0) fail("image_channels", "must be positive");
    if (image_size < 8 || !is_power_of_two(image_size)) {
      fail("image_size", "must be a power of two >= 8, got " + std::to_string(image_size));
    }
    if (backbone == ClusterBackbone::resnet18 && penultimate != 512) {
      fail("penultimate", "resnet18 backbone has a 512-wide penultimate layer, got " +
                              std::to_string(penultimate));
    }
  }
}

Shape ArchConfig::sample_shape() const {
  if (family == Family::mlp) return {data_dim};
  return {image_channels, image_size, image_size};
}

std::string ArchConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "family=" << to_string(family) << ";latent_dim=" << latent_dim << ";num_clusters="
     << num_clusters << ";embed_dim=" << embed_dim << ";conditional=" << conditional;
  if (family == Family::mlp) {
    os << ";data_dim=" << data_dim << ";hidden=" << hidden << ";c_hidden=" << c_hidden
       << ";output_scale=" << output_scale;
  } else {
    os << ";channels=" << channels << ";image_size=" << image_size
       << ";image_channels=" << image_channels << ";backbone=" << to_string(backbone);
  }
  os << ";penultimate=" << penultimate << ";spectral=" << spectral_g << spectral_d << spectral_c;
  return os.str();
}

// ---------------------------------------------------------------- Generator

Generator::Generator(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  arch_.validate();
  const bool sn = arch_.spectral_g;
  if (arch_.conditional) {
    embed_ = Linear(arch_.num_clusters, arch_.embed_dim, false, sn, Init::orthogonal, rng);
  }
  auto make_norm = [&](std::size_t channels) {
    if (arch_.conditional) {
      cbn_.emplace_back(channels, arch_.embed_dim, sn, rng);
    } else {
      bn_.emplace_back(channels);
    }
  };
  if (arch_.family == Family::mlp) {
    const std::size_t h = arch_.hidden;
    dense_.emplace_back(arch_.latent_dim, h, true, sn, Init::orthogonal, rng);
    make_norm(h);
    dense_.emplace_back(h, h, true, sn, Init::orthogonal, rng);
    make_norm(h);
    dense_.emplace_back(h, arch_.data_dim, true, sn, Init::orthogonal, rng);
    return;
  }
  const std::size_t width = 4 * arch_.channels;
  stem_ = Linear(arch_.latent_dim, width * 16, true, sn, Init::orthogonal, rng);
  for (std::size_t size = 4; size < arch_.image_size; size *= 2) {
    UpBlock block;
    make_norm(width);
    make_norm(width);
    block.conv1 = Conv2d(width, width, 3, 1, 1, true, sn, Init::orthogonal, rng);
    block.conv2 = Conv2d(width, width, 3, 1, 1, true, sn, Init::orthogonal, rng);
    block.shortcut = Conv2d(width, width, 1, 1, 0, true, sn, Init::orthogonal, rng);
    blocks_.push_back(std::move(block));
  }
  out_bn_ = BatchNorm(width);
  out_conv_ = Conv2d(width, arch_.image_channels, 3, 1, 1, true, sn, Init::orthogonal, rng);
}

Tensor Generator::norm(std::size_t index, const Tensor& h, const Tensor& embedding, bool training) {
  if (arch_.conditional) return cbn_[index].forward(h, embedding, training);
  return bn_[index].forward(h, training);
}

Tensor Generator::up_block(UpBlock& block, const Tensor& x, const Tensor& embedding, bool training) {
  const std::size_t index = 2 * static_cast<std::size_t>(&block - blocks_.data());
  Tensor h = ops::relu(norm(index, x, embedding, training));
  h = block.conv1.forward(ops::upsample_nearest2(h), training);
  h = ops::relu(norm(index + 1, h, embedding, training));
  h = block.conv2.forward(h, training);
  Tensor skip = block.shortcut.forward(ops::upsample_nearest2(x), training);
  return ops::add(h, skip);
}

Tensor Generator::forward(const Tensor& z, const std::optional<Tensor>& label, bool training) {
  if (z.rank() != 2 || z.dim(1) != arch_.latent_dim) {
    throw ConfigError("generator: latent must be [N, " + std::to_string(arch_.latent_dim) +
                      "], got " + shape_string(z.shape()));
  }
  const std::size_t n = z.dim(0);
  Tensor embedding;
  if (arch_.conditional) {
    if (!label) throw ConfigError("generator: conditional generator requires a label");
    require_label(*label, n, arch_.num_clusters, "generator");
    embedding = embed_.forward(*label, training);
    ++embed_calls_;
    ++g_label_embeddings;
  }
  if (arch_.family == Family::mlp) {
    Tensor h = ops::relu(norm(0, dense_[0].forward(z, training), embedding, training));
    h = ops::relu(norm(1, dense_[1].forward(h, training), embedding, training));
    return ops::scale(ops::tanh(dense_[2].forward(h, training)), arch_.output_scale);
  }
  const std::size_t width = 4 * arch_.channels;
  Tensor h = ops::reshape(stem_.forward(z, training), {n, width, 4, 4});
  for (auto& block : blocks_) h = up_block(block, h, embedding, training);
  h = ops::relu(out_bn_.forward(h, training));
  return ops::tanh(out_conv_.forward(h, training));
}

ParamSet Generator::parameters() {
  ParamSet set;
  if (arch_.conditional) embed_.collect("g.embed", set);
  for (std::size_t i = 0; i < dense_.size(); ++i) dense_[i].collect("g.dense" + std::to_string(i), set);
  if (arch_.family == Family::conv) {
    stem_.collect("g.stem", set);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const std::string p = "g.block" + std::to_string(i);
      blocks_[i].conv1.collect(p + ".conv1", set);
      blocks_[i].conv2.collect(p + ".conv2", set);
      blocks_[i].shortcut.collect(p + ".shortcut", set);
    }
    out_bn_.collect("g.out_bn", set);
    out_conv_.collect("g.out_conv", set);
  }
  for (std::size_t i = 0; i < cbn_.size(); ++i) cbn_[i].collect("g.cbn" + std::to_string(i), set);
  for (std::size_t i = 0; i < bn_.size(); ++i) bn_[i].collect("g.bn" + std::to_string(i), set);
  return set;
}

void Generator::freeze_spectral(bool frozen) {
  embed_.freeze_spectral(frozen);
  for (auto& l : dense_) l.freeze_spectral(frozen);
  for (auto& c : cbn_) c.freeze_spectral(frozen);
  stem_.freeze_spectral(frozen);
  for (auto& b : blocks_) {
    b.conv1.freeze_spectral(frozen);
    b.conv2.freeze_spectral(frozen);
    b.shortcut.freeze_spectral(frozen);
  }
  out_conv_.freeze_spectral(frozen);
}

// ------------------------------------------------------------ Discriminator

Discriminator::Discriminator(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  arch_.validate();
  const bool sn = arch_.spectral_d;
  if (arch_.family == Family::mlp) {
    dense_.emplace_back(arch_.data_dim, arch_.hidden, true, sn, Init::orthogonal, rng);
    dense_.emplace_back(arch_.hidden, arch_.hidden, true, sn, Init::orthogonal, rng);
    feature_dim_ = arch_.hidden;
  } else {
    const std::size_t width = 4 * arch_.channels;
    std::size_t in = arch_.image_channels;
    for (std::size_t size = arch_.image_size; size > 4; size /= 2) {
      DownBlock block;
      block.preactivate = !blocks_.empty();
      block.conv1 = Conv2d(in, width, 3, 1, 1, true, sn, Init::orthogonal, rng);
      block.conv2 = Conv2d(width, width, 3, 1, 1, true, sn, Init::orthogonal, rng);
      block.shortcut = Conv2d(in, width, 1, 1, 0, true, sn, Init::orthogonal, rng);
      blocks_.push_back(std::move(block));
      in = width;
    }
    DownBlock last;
    last.downsample = false;
    last.learned_shortcut = false;
    last.conv1 = Conv2d(width, width, 3, 1, 1, true, sn, Init::orthogonal, rng);
    last.conv2 = Conv2d(width, width, 3, 1, 1, true, sn, Init::orthogonal, rng);
    blocks_.push_back(std::move(last));
    feature_dim_ = width;
  }
  unary_head_ = Linear(feature_dim_, 1, true, sn, Init::orthogonal, rng);
  if (arch_.conditional) {
    embed_ = Linear(arch_.num_clusters, feature_dim_, false, sn, Init::orthogonal, rng);
  }
}

Tensor Discriminator::features(const Tensor& x, bool training) {
  require_input(x, arch_, "discriminator");
  if (arch_.family == Family::mlp) {
    Tensor h = ops::relu(dense_[0].forward(x, training));
    return ops::relu(dense_[1].forward(h, training));
  }
  Tensor h = x;
  for (auto& block : blocks_) {
    Tensor r = block.preactivate ? ops::relu(h) : h;
    r = block.conv2.forward(ops::relu(block.conv1.forward(r, training)), training);
    Tensor skip = h;
    if (block.learned_shortcut) skip = block.shortcut.forward(h, training);
    if (block.downsample) {
      r = ops::avg_pool2(r);
      skip = ops::avg_pool2(skip);
    }
    h = ops::add(r, skip);
  }
  return ops::global_sum_pool(ops::relu(h));
}

ScorePair Discriminator::forward(const Tensor& x, const std::optional<Tensor>& label, bool training) {
  Tensor phi = features(x, training);
  const std::size_t n = phi.dim(0);
  ScorePair scores;
  scores.unary = ops::reshape(unary_head_.forward(phi, training), {n});
  if (arch_.conditional && label) {
    require_label(*label, n, arch_.num_clusters, "discriminator");
    Tensor embedded = embed_.forward(*label, training);
    ++embed_calls_;
    ++g_label_embeddings;
    scores.joint = ops::add(scores.unary, ops::row_dot(embedded, phi));
  }
  return scores;
}

ParamSet Discriminator::parameters() {
  ParamSet set;
  for (std::size_t i = 0; i < dense_.size(); ++i) dense_[i].collect("d.dense" + std::to_string(i), set);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "d.block" + std::to_string(i);
    blocks_[i].conv1.collect(p + ".conv1", set);
    blocks_[i].conv2.collect(p + ".conv2", set);
    if (blocks_[i].learned_shortcut) blocks_[i].shortcut.collect(p + ".shortcut", set);
  }
  unary_head_.collect("d.unary", set);
  if (arch_.conditional) embed_.collect("d.embed", set);
  return set;
}

void Discriminator::freeze_spectral(bool frozen) {
  for (auto& l : dense_) l.freeze_spectral(frozen);
  for (auto& b : blocks_) {
    b.conv1.freeze_spectral(frozen);
    b.conv2.freeze_spectral(frozen);
    b.shortcut.freeze_spectral(frozen);
  }
  unary_head_.freeze_spectral(frozen);
  embed_.freeze_spectral(frozen);
}

// ------------------------------------------------------------ ClusteringNet

ClusteringNet::ClusteringNet(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  arch_.validate();
  const bool sn = arch_.spectral_c;
  const Init init = Init::he_normal;
  if (arch_.family == Family::mlp) {
    dense_.emplace_back(arch_.data_dim, arch_.c_hidden, true, sn, init, rng);
    dense_.emplace_back(arch_.c_hidden, arch_.penultimate, true, sn, init, rng);
  } else if (arch_.backbone == ClusterBackbone::small) {
    const std::size_t w = arch_.channels;
    const std::size_t widths[4] = {w, 2 * w, 4 * w, 4 * w};
    std::size_t in = arch_.image_channels;
    for (std::size_t out : widths) {
      convs_.emplace_back(in, out, 3, 1, 1, true, sn, init, rng);
      in = out;
    }
    proj_ = Linear(in, arch_.penultimate, true, sn, init, rng);
  } else {
    stem_ = Conv2d(arch_.image_channels, 64, 3, 1, 1, false, sn, init, rng);
    stem_bn_ = BatchNorm(64);
    std::size_t in = 64;
    for (std::size_t stage = 0; stage < 4; ++stage) {
      const std::size_t out = 64u << stage;
      for (std::size_t b = 0; b < 2; ++b) {
        const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
        ResBlock block;
        block.conv1 = Conv2d(in, out, 3, stride, 1, false, sn, init, rng);
        block.bn1 = BatchNorm(out);
        block.conv2 = Conv2d(out, out, 3, 1, 1, false, sn, init, rng);
        block.bn2 = BatchNorm(out);
        block.projection = stride != 1 || in != out;
        if (block.projection) {
          block.shortcut = Conv2d(in, out, 1, stride, 0, false, sn, init, rng);
          block.shortcut_bn = BatchNorm(out);
        }
        res_blocks_.push_back(std::move(block));
        in = out;
      }
    }
  }
  head_ = Linear(feature_dim(), arch_.num_clusters, true, sn,
                 arch_.zero_init_c_head ? Init::zeros : init, rng);
}

std::size_t ClusteringNet::feature_dim() const {
  if (arch_.family == Family::conv && arch_.backbone == ClusterBackbone::resnet18) return 512;
  return arch_.penultimate;
}

Tensor ClusteringNet::features(const Tensor& x, bool training) {
  require_input(x, arch_, "clustering");
  if (arch_.family == Family::mlp) {
    Tensor h = ops::relu(dense_[0].forward(x, training));
    return ops::relu(dense_[1].forward(h, training));
  }
  if (arch_.backbone == ClusterBackbone::small) {
    Tensor h = x;
    for (auto& conv : convs_) {
      h = ops::relu(conv.forward(h, training));
      if (h.dim(2) >= 2 && h.dim(2) % 2 == 0) h = ops::avg_pool2(h);
    }
    return ops::relu(proj_.forward(ops::global_avg_pool(h), training));
  }
  Tensor h = ops::relu(stem_bn_.forward(stem_.forward(x, training), training));
  for (auto& block : res_blocks_) {
    Tensor r = ops::relu(block.bn1.forward(block.conv1.forward(h, training), training));
    r = block.bn2.forward(block.conv2.forward(r, training), training);
    Tensor skip = h;
    if (block.projection) skip = block.shortcut_bn.forward(block.shortcut.forward(h, training), training);
    h = ops::relu(ops::add(r, skip));
  }
  return ops::global_avg_pool(h);
}

Tensor ClusteringNet::head(const Tensor& features, bool training) { return head_.forward(features, training); }

Tensor ClusteringNet::logits(const Tensor& x, bool training) {
  ++forward_calls_;
  ++g_clustering_forwards;
  return head(features(x, training), training);
}

Tensor ClusteringNet::forward(const Tensor& x, bool training) { return ops::softmax(logits(x, training)); }

ParamSet ClusteringNet::parameters() {
  ParamSet set;
  for (std::size_t i = 0; i < dense_.size(); ++i) dense_[i].collect("c.dense" + std::to_string(i), set);
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].collect("c.conv" + std::to_string(i), set);
  if (arch_.family == Family::conv && arch_.backbone == ClusterBackbone::small) proj_.collect("c.proj", set);
  if (arch_.family == Family::conv && arch_.backbone == ClusterBackbone::resnet18) {
    stem_.collect("c.stem", set);
    stem_bn_.collect("c.stem_bn", set);
    for (std::size_t i = 0; i < res_blocks_.size(); ++i) {
      const std::string p = "c.res" + std::to_string(i);
      auto& b = res_blocks_[i];
      b.conv1.collect(p + ".conv1", set);
      b.bn1.collect(p + ".bn1", set);
      b.conv2.collect(p + ".conv2", set);
      b.bn2.collect(p + ".bn2", set);
      if (b.projection) {
        b.shortcut.collect(p + ".shortcut", set);
        b.shortcut_bn.collect(p + ".shortcut_bn", set);
      }
    }
  }
  head_.collect("c.head", set);
  return set;
}

void ClusteringNet::freeze_spectral(bool frozen) {
  for (auto& l : dense_) l.freeze_spectral(frozen);
  for (auto& c : convs_) c.freeze_spectral(frozen);
  proj_.freeze_spectral(frozen);
  stem_.freeze_spectral(frozen);
  for (auto& b : res_blocks_) {
    b.conv1.freeze_spectral(frozen);
    b.conv2.freeze_spectral(frozen);
    b.shortcut.freeze_spectral(frozen);
  }
  head_.freeze_spectral(frozen);
}

// ------------------------------------------------------------------ helpers

namespace instrumentation {
std::uint64_t clustering_forwards() { return g_clustering_forwards.load(); }
std::uint64_t label_embeddings() { return g_label_embeddings.load(); }
}  // namespace instrumentation

std::uint64_t parameter_hash(const ParamSet& set) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : set.params) {
    mix(p.name.data(), p.name.size());
    mix(p.tensor.data().data(), p.tensor.numel() * sizeof(double));
  }
  return h;
}

void set_requires_grad(ParamSet& set, bool on) {
  for (auto& p : set.params) p.tensor.set_requires_grad(on);
}

void zero_grad(ParamSet& set) {
  for (auto& p : set.params) p.tensor.zero_grad();
}

void check_finite(const ParamSet& set, const std::string& network) {
  for (const auto& p : set.params) {
    for (double v : p.tensor.data()) {
      if (!std::isfinite(v)) throw NumericError(network + ": non-finite value in parameter " + p.name);
    }
  }
}

}  // namespace slcgan
