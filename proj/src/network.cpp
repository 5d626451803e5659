/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The fbw3d Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fbw3d/network.hpp"

#include <algorithm>
#include <cmath>

#include "fbw3d/datamodel.hpp"
#include "fbw3d/errors.hpp"

namespace fbw3d {

namespace nn = torch::nn;
using nlohmann::json;

namespace {

int64_t scaled(int64_t c, double w) {
  return std::max<int64_t>(1, std::llround(static_cast<double>(c) * w));
}

nn::Conv3d conv3d(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t pad, bool bias = false) {
  return nn::Conv3d(nn::Conv3dOptions(in, out, kernel).stride(stride).padding(pad).bias(bias));
}

void kaiming_init(nn::Module& m) {
  torch::NoGradGuard no_grad;
  for (auto& child : m.modules(/*include_self=*/false)) {
    if (auto* conv = child->as<nn::Conv3d>()) {
      nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
    }
  }
}

}  // namespace

std::array<int64_t, 4> BackboneConfig::channels() const {
  std::array<int64_t, 4> out{};
  for (size_t i = 0; i < 4; ++i) out[i] = scaled(stage_channels[i], width_multiplier);
  return out;
}

int64_t BackboneConfig::fusion_channels() const { return scaled(kFusionWidth, width_multiplier); }

void BackboneConfig::validate() const {
  if (!(width_multiplier > 0.0 && width_multiplier <= 1.0)) {
    throw ConfigError("width_multiplier must be in (0, 1]");
  }
  if (input_channels != kInputChannels) throw ConfigError("backbone input_channels must be 5");
  for (int64_t k : stem_kernel) {
    if (k < 1 || k % 2 == 0) throw ConfigError("stem_kernel entries must be odd and positive");
  }
  for (int64_t c : stage_channels) {
    if (c < 1) throw ConfigError("stage_channels must be positive");
  }
}

int64_t NetworkConfig::embedding_dim() const {
  return feature_fusion ? 4 * backbone.fusion_channels() : backbone.channels()[3];
}

void NetworkConfig::validate() const {
  backbone.validate();
  ssm.validate();
  if (!use_head && !use_abdomen) throw ConfigError("at least one of head/abdomen input must be enabled");
}

json to_json(const NetworkConfig& c) {
  return {{"stage_channels", c.backbone.stage_channels},
          {"width_multiplier", c.backbone.width_multiplier},
          {"stem_kernel", c.backbone.stem_kernel},
          {"ssm", {{"state_dim", c.ssm.state_dim}, {"expansion", c.ssm.expansion}, {"conv_width", c.ssm.conv_width}}},
          {"weight_sharing", c.weight_sharing},
          {"feature_fusion", c.feature_fusion},
          {"channel_attention", c.channel_attention},
          {"spatial_attention", c.spatial_attention},
          {"use_head", c.use_head},
          {"use_abdomen", c.use_abdomen}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  c.backbone.stage_channels = j.at("stage_channels").get<std::array<int64_t, 4>>();
  c.backbone.width_multiplier = j.at("width_multiplier").get<double>();
  c.backbone.stem_kernel = j.at("stem_kernel").get<std::array<int64_t, 3>>();
  const auto& s = j.at("ssm");
  c.ssm = {s.at("state_dim").get<int64_t>(), s.at("expansion").get<int64_t>(), s.at("conv_width").get<int64_t>()};
  c.weight_sharing = j.at("weight_sharing").get<bool>();
  c.feature_fusion = j.at("feature_fusion").get<bool>();
  c.channel_attention = j.at("channel_attention").get<bool>();
  c.spatial_attention = j.at("spatial_attention").get<bool>();
  c.use_head = j.at("use_head").get<bool>();
  c.use_abdomen = j.at("use_abdomen").get<bool>();
  c.validate();
  return c;
}

BasicBlock3dImpl::BasicBlock3dImpl(int64_t in_channels, int64_t out_channels, int64_t stride) {
  conv1_ = register_module("conv1", conv3d(in_channels, out_channels, 3, stride, 1));
  bn1_ = register_module("bn1", nn::BatchNorm3d(out_channels));
  conv2_ = register_module("conv2", conv3d(out_channels, out_channels, 3, 1, 1));
  bn2_ = register_module("bn2", nn::BatchNorm3d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    shortcut_ = register_module(
        "shortcut", nn::Sequential(conv3d(in_channels, out_channels, 1, stride, 0), nn::BatchNorm3d(out_channels)));
  }
}

torch::Tensor BasicBlock3dImpl::forward(const torch::Tensor& x) {
  auto out = torch::relu(bn1_->forward(conv1_->forward(x)));
  out = bn2_->forward(conv2_->forward(out));
  auto identity = shortcut_ ? shortcut_->forward(x) : x;
  return torch::relu(out + identity);
}

void check_input_dims(const torch::Tensor& x) {
  static const char* const kAxis[3] = {"depth", "height", "width"};
  if (x.dim() != 5) throw ShapeError("network input must be (B, C, D, H, W)");
  for (int a = 0; a < 3; ++a) {
    const int64_t n = x.size(2 + a);
    if (n < 32 || n % 32 != 0) {
      throw ShapeError(std::string("input ") + kAxis[a] + " (" + std::to_string(n) +
                       ") must be a positive multiple of 32");
    }
  }
}

Backbone3dImpl::Backbone3dImpl(const BackboneConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto ch = cfg_.channels();
  const auto& k = cfg_.stem_kernel;
  stem_ = register_module(
      "stem", nn::Conv3d(nn::Conv3dOptions(cfg_.input_channels, ch[0], {k[0], k[1], k[2]})
                             .stride(2)
                             .padding({k[0] / 2, k[1] / 2, k[2] / 2})
                             .bias(false)));
  stem_bn_ = register_module("stem_bn", nn::BatchNorm3d(ch[0]));
  int64_t in = ch[0];
  for (size_t s = 0; s < 4; ++s) {
    const int64_t stride = s == 0 ? 1 : 2;
    stages_[s] = register_module("layer" + std::to_string(s + 1),
                                 nn::Sequential(BasicBlock3d(in, ch[s], stride), BasicBlock3d(ch[s], ch[s], 1)));
    in = ch[s];
  }
  kaiming_init(*this);
}

MultiScaleFeatures Backbone3dImpl::forward(const torch::Tensor& x) {
  check_input_dims(x);
  if (x.size(1) != cfg_.input_channels) throw ShapeError("backbone expects 5 input channels");
  auto h = torch::relu(stem_bn_->forward(stem_->forward(x)));
  h = torch::max_pool3d(h, 3, 2, 1);
  MultiScaleFeatures out;
  for (size_t s = 0; s < 4; ++s) {
    h = stages_[s]->forward(h);
    out[s] = h;
  }
  return out;
}

MultiScaleFusionImpl::MultiScaleFusionImpl(const std::array<int64_t, 4>& in_channels, int64_t width) {
  constexpr std::array<int64_t, 4> kDown{8, 4, 2, 1};
  for (size_t s = 0; s < 4; ++s) {
    const auto tag = std::to_string(s + 1);
    proj_[s] = register_module("proj" + tag, nn::Conv3d(nn::Conv3dOptions(in_channels[s], width, 1)));
    down_[s] = register_module("down" + tag, nn::Conv3d(nn::Conv3dOptions(width, width, kDown[s]).stride(kDown[s])));
  }
}

torch::Tensor MultiScaleFusionImpl::forward(const MultiScaleFeatures& f) {
  const auto& last = f[3];
  std::vector<torch::Tensor> parts;
  for (size_t s = 0; s < 4; ++s) {
    auto p = down_[s]->forward(proj_[s]->forward(f[s]));
    if (p.sizes().slice(2) != last.sizes().slice(2)) {
      throw ShapeError("scale " + std::to_string(s + 1) + " does not align with the stride-32 grid");
    }
    parts.push_back(p);
  }
  return torch::cat(parts, 1);
}

ChannelAttentionImpl::ChannelAttentionImpl(int64_t channels) {
  const int64_t hidden = std::max<int64_t>(1, channels / kChannelReduction);
  fc1 = register_module("fc1", nn::Linear(channels, hidden));
  fc2 = register_module("fc2", nn::Linear(hidden, channels));
}

torch::Tensor ChannelAttentionImpl::gate(const torch::Tensor& z) {
  auto pooled = z.mean({2, 3, 4});
  return torch::sigmoid(fc2->forward(torch::relu(fc1->forward(pooled))));
}

torch::Tensor ChannelAttentionImpl::forward(const torch::Tensor& z) {
  return z * gate(z).unsqueeze(-1).unsqueeze(-1).unsqueeze(-1);
}

namespace {

void check_scan(int k) {
  if (k < 1 || k > kNumScans) throw DomainError("scan order must be in 1..6, got " + std::to_string(k));
}

// Permutation taking (B, C, D, H, W) to (B, outer, middle, fastest, C).
std::array<int64_t, 5> scan_permutation(int k) {
  switch ((k + 1) / 2) {
    case 1: return {0, 2, 3, 4, 1};
    case 2: return {0, 2, 4, 3, 1};
    default: return {0, 3, 4, 2, 1};
  }
}

}  // namespace

torch::Tensor flatten_scan(const torch::Tensor& z, int k) {
  check_scan(k);
  if (z.dim() != 5) throw ShapeError("flatten_scan expects (B, C, D, H, W)");
  const auto perm = scan_permutation(k);
  auto seq = z.permute(perm).reshape({z.size(0), z.size(2) * z.size(3) * z.size(4), z.size(1)});
  if (k % 2 == 0) seq = seq.flip(1);
  return seq.contiguous();
}

torch::Tensor unflatten_scan(const torch::Tensor& seq, int k, const std::array<int64_t, 3>& grid) {
  check_scan(k);
  if (seq.dim() != 3 || seq.size(1) != grid[0] * grid[1] * grid[2]) {
    throw ShapeError("unflatten_scan sequence length does not match the grid");
  }
  const auto perm = scan_permutation(k);
  auto s = k % 2 == 0 ? seq.flip(1) : seq;
  // Permuted grid shape (B, a, b, c, C), then invert the permutation.
  const std::array<int64_t, 5> full{seq.size(0), seq.size(2), grid[0], grid[1], grid[2]};
  auto v = s.reshape({full[perm[0]], full[perm[1]], full[perm[2]], full[perm[3]], full[perm[4]]});
  std::array<int64_t, 5> inverse{};
  for (int64_t i = 0; i < 5; ++i) inverse[static_cast<size_t>(perm[static_cast<size_t>(i)])] = i;
  return v.permute(inverse).contiguous();
}

SpatialAttentionImpl::SpatialAttentionImpl(int64_t channels, const SSMConfig& cfg) {
  for (int k = 1; k <= kNumScans; ++k) {
    blocks_.push_back(register_module("scan" + std::to_string(k), SelectiveSSM(channels, cfg)));
  }
}

torch::Tensor SpatialAttentionImpl::forward_with(const torch::Tensor& z, const BlockFn& block) {
  const std::array<int64_t, 3> grid{z.size(2), z.size(3), z.size(4)};
  // Accumulated in float64.
  torch::Tensor sum;
  for (int k = 1; k <= kNumScans; ++k) {
    auto out = unflatten_scan(block(k, flatten_scan(z, k)), k, grid).to(torch::kFloat64);
    sum = sum.defined() ? sum + out : out;
  }
  return (sum / static_cast<double>(kNumScans)).to(z.scalar_type());
}

torch::Tensor SpatialAttentionImpl::forward(const torch::Tensor& z) {
  return forward_with(z, [this](int k, const torch::Tensor& seq) {
    return blocks_[static_cast<size_t>(k - 1)]->forward(seq);
  });
}

SiteEncoderImpl::SiteEncoderImpl(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  backbone = register_module("backbone", Backbone3d(cfg_.backbone));
  const int64_t dim = cfg_.embedding_dim();
  if (cfg_.feature_fusion) {
    fusion = register_module("fusion", MultiScaleFusion(cfg_.backbone.channels(), cfg_.backbone.fusion_channels()));
  }
  if (cfg_.channel_attention) channel_attention = register_module("channel_attention", ChannelAttention(dim));
  if (cfg_.spatial_attention) spatial_attention = register_module("spatial_attention", SpatialAttention(dim, cfg_.ssm));
}

EncoderTrace SiteEncoderImpl::trace(const torch::Tensor& x) {
  EncoderTrace t;
  t.stages = backbone->forward(x);
  t.fused = fusion ? fusion->forward(t.stages) : t.stages[3];
  t.channel_attended = channel_attention ? channel_attention->forward(t.fused) : t.fused;
  t.spatial_attended = spatial_attention ? spatial_attention->forward(t.channel_attended) : t.channel_attended;
  t.embedding = t.spatial_attended.mean({2, 3, 4});
  return t;
}

torch::Tensor SiteEncoderImpl::forward(const torch::Tensor& x) { return trace(x).embedding; }

PairHeadImpl::PairHeadImpl(int64_t embedding_dim) : embedding_dim_(embedding_dim) {
  fc = register_module("fc", nn::Linear(2 * embedding_dim, 1));
}

torch::Tensor PairHeadImpl::predict_pair(const torch::Tensor& e_head, const torch::Tensor& e_abd) {
  if (e_head.size(-1) != embedding_dim_ || e_abd.size(-1) != embedding_dim_ || e_head.sizes() != e_abd.sizes()) {
    throw ShapeError("pair head expects two (N, " + std::to_string(embedding_dim_) + ") embeddings");
  }
  return torch::sigmoid(fc->forward(torch::cat({e_head, e_abd}, -1))).squeeze(-1);
}

torch::Tensor PairHeadImpl::pair_matrix(const torch::Tensor& e_head, const torch::Tensor& e_abd) {
  if (e_head.dim() != 2 || e_abd.dim() != 2 || e_head.size(1) != embedding_dim_ ||
      e_abd.size(1) != embedding_dim_ || e_head.size(0) != e_abd.size(0)) {
    throw ShapeError("pair matrix expects two (N, " + std::to_string(embedding_dim_) + ") embeddings");
  }
  const auto w_head = fc->weight.narrow(1, 0, embedding_dim_);
  const auto w_abd = fc->weight.narrow(1, embedding_dim_, embedding_dim_);
  auto head_score = torch::matmul(e_head, w_head.t());  // (N, 1)
  auto abd_score = torch::matmul(e_abd, w_abd.t());     // (N, 1)
  return torch::sigmoid(head_score + abd_score.t() + fc->bias);
}

FbwNetImpl::FbwNetImpl(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  // With a single active site there is nothing to share or split.
  if (cfg_.weight_sharing || !cfg_.use_head || !cfg_.use_abdomen) {
    head_encoder_ = register_module("encoder", SiteEncoder(cfg_));
    abd_encoder_ = head_encoder_;
  } else {
    head_encoder_ = register_module("head_encoder", SiteEncoder(cfg_));
    abd_encoder_ = register_module("abdomen_encoder", SiteEncoder(cfg_));
  }
  head = register_module("head", PairHead(cfg_.embedding_dim()));
}

SiteEncoder FbwNetImpl::encoder(Site site) const { return site == Site::kHead ? head_encoder_ : abd_encoder_; }

torch::Tensor FbwNetImpl::encode(Site site, const torch::Tensor& x) {
  const bool enabled = site == Site::kHead ? cfg_.use_head : cfg_.use_abdomen;
  if (!enabled) {
    check_input_dims(x);
    return torch::zeros({x.size(0), cfg_.embedding_dim()}, x.options());
  }
  encoded_ += x.size(0);
  return encoder(site)->forward(x);
}

torch::Tensor FbwNetImpl::forward(const torch::Tensor& x_head, const torch::Tensor& x_abd) {
  return head->predict_pair(encode(Site::kHead, x_head), encode(Site::kAbdomen, x_abd));
}

std::vector<std::pair<std::string, torch::Tensor>> named_state(const nn::Module& m) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : m.named_parameters()) out.emplace_back(p.key(), p.value());
  for (const auto& b : m.named_buffers()) out.emplace_back(b.key(), b.value());
  return out;
}

void copy_state(nn::Module& dst, const nn::Module& src) {
  torch::NoGradGuard no_grad;
  auto src_params = src.named_parameters();
  auto src_buffers = src.named_buffers();
  for (auto& p : dst.named_parameters()) {
    const auto* s = src_params.find(p.key());
    if (!s || s->sizes() != p.value().sizes()) throw ShapeError("parameter mismatch for '" + p.key() + "'");
    p.value().copy_(*s);
  }
  for (auto& b : dst.named_buffers()) {
    const auto* s = src_buffers.find(b.key());
    if (!s || s->sizes() != b.value().sizes()) throw ShapeError("buffer mismatch for '" + b.key() + "'");
    b.value().copy_(*s);
  }
}

void cast_floating(nn::Module& m, torch::Dtype dtype) {
  torch::NoGradGuard no_grad;
  for (auto& p : m.parameters()) {
    if (p.is_floating_point()) p.set_data(p.to(dtype));
  }
  for (auto& b : m.buffers()) {
    if (b.is_floating_point()) b.set_data(b.to(dtype));
  }
}

}  // namespace fbw3d
