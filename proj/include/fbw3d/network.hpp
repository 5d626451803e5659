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

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "fbw3d/phantom.hpp"
#include "fbw3d/ssm.hpp"

namespace fbw3d {

inline constexpr std::array<int64_t, 4> kStageStrides{4, 8, 16, 32};
inline constexpr int64_t kFusionWidth = 128;
inline constexpr int64_t kChannelReduction = 16;
inline constexpr int kNumScans = 6;

struct BackboneConfig {
  std::array<int64_t, 4> stage_channels{64, 128, 256, 512};
  double width_multiplier = 1.0;
  int64_t input_channels = 5;
  /// Stem kernel (d, h, w); stride is 2 on every axis.
  std::array<int64_t, 3> stem_kernel{3, 7, 7};

  std::array<int64_t, 4> channels() const;
  int64_t fusion_channels() const;
  void validate() const;
};

/// Which MFFN components are active; every flag on is the full model.
struct NetworkConfig {
  BackboneConfig backbone;
  SSMConfig ssm;
  bool weight_sharing = true;
  bool feature_fusion = true;
  bool channel_attention = true;
  bool spatial_attention = true;
  bool use_head = true;
  bool use_abdomen = true;

  /// Per-site embedding length (512 at width 1).
  int64_t embedding_dim() const;
  void validate() const;
};

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

class BasicBlock3dImpl : public torch::nn::Module {
 public:
  BasicBlock3dImpl(int64_t in_channels, int64_t out_channels, int64_t stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv3d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr};
  torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(BasicBlock3d);

/// Four feature maps at strides 4, 8, 16 and 32.
using MultiScaleFeatures = std::array<torch::Tensor, 4>;

/// ResNet18-style volumetric backbone (stride-2 stem conv + stride-2 max pool,
/// then four stages of two basic blocks).
class Backbone3dImpl : public torch::nn::Module {
 public:
  explicit Backbone3dImpl(const BackboneConfig& cfg);
  /// x: (B, 5, D, H, W) with D, H, W divisible by 32.
  MultiScaleFeatures forward(const torch::Tensor& x);

 private:
  BackboneConfig cfg_;
  torch::nn::Conv3d stem_{nullptr};
  torch::nn::BatchNorm3d stem_bn_{nullptr};
  std::array<torch::nn::Sequential, 4> stages_;
};
TORCH_MODULE(Backbone3d);

/// Throws ShapeError naming the first spatial axis not divisible by 32.
void check_input_dims(const torch::Tensor& x);

/// 1x1x1 projection of every scale to a common width, kernel=stride
/// downsampling to the stride-32 grid, channel concatenation (scale 1 first).
class MultiScaleFusionImpl : public torch::nn::Module {
 public:
  MultiScaleFusionImpl(const std::array<int64_t, 4>& in_channels, int64_t width);
  torch::Tensor forward(const MultiScaleFeatures& f);

 private:
  std::array<torch::nn::Conv3d, 4> proj_{nullptr, nullptr, nullptr, nullptr};
  std::array<torch::nn::Conv3d, 4> down_{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(MultiScaleFusion);

/// z * sigmoid(MLP(GAP(z))) with a channels/16 ReLU bottleneck.
class ChannelAttentionImpl : public torch::nn::Module {
 public:
  explicit ChannelAttentionImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& z);
  /// Per-channel gate, (B, C).
  torch::Tensor gate(const torch::Tensor& z);

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(ChannelAttention);

/// Flattens (B, C, D, H, W) into (B, L, C) following scan order k in 1..6:
/// 1 raster with W fastest (D, H, W), 3 H fastest (D, W, H), 5 D fastest
/// (H, W, D); the even orders are full reversals of the preceding odd order.
torch::Tensor flatten_scan(const torch::Tensor& z, int k);
/// Exact inverse of flatten_scan for the same k and grid dims (D, H, W).
torch::Tensor unflatten_scan(const torch::Tensor& seq, int k, const std::array<int64_t, 3>& grid);

/// Six scan orders, one selective SSM each, averaged back on the grid.
class SpatialAttentionImpl : public torch::nn::Module {
 public:
  SpatialAttentionImpl(int64_t channels, const SSMConfig& cfg);

  torch::Tensor forward(const torch::Tensor& z);

  /// Same composition with the per-scan block replaced by `block(k, seq)`.
  using BlockFn = std::function<torch::Tensor(int k, const torch::Tensor& seq)>;
  torch::Tensor forward_with(const torch::Tensor& z, const BlockFn& block);

  SelectiveSSM block(int k) const { return blocks_.at(static_cast<size_t>(k - 1)); }

 private:
  std::vector<SelectiveSSM> blocks_;
};
TORCH_MODULE(SpatialAttention);

/// Intermediate tensors of one encoder pass, for inspection.
struct EncoderTrace {
  MultiScaleFeatures stages;
  torch::Tensor fused;
  torch::Tensor channel_attended;
  torch::Tensor spatial_attended;
  torch::Tensor embedding;
};

/// Backbone -> fusion -> channel attention -> spatial attention -> GAP.
class SiteEncoderImpl : public torch::nn::Module {
 public:
  explicit SiteEncoderImpl(const NetworkConfig& cfg);
  /// (B, 5, D, H, W) -> (B, embedding_dim).
  torch::Tensor forward(const torch::Tensor& x);
  EncoderTrace trace(const torch::Tensor& x);

  Backbone3d backbone{nullptr};
  MultiScaleFusion fusion{nullptr};
  ChannelAttention channel_attention{nullptr};
  SpatialAttention spatial_attention{nullptr};

 private:
  NetworkConfig cfg_;
};
TORCH_MODULE(SiteEncoder);

/// Single affine layer on concat(head, abdomen) followed by a sigmoid.
class PairHeadImpl : public torch::nn::Module {
 public:
  explicit PairHeadImpl(int64_t embedding_dim);

  /// e_head, e_abd: (N, E) -> (N,) probabilities for row-aligned pairs.
  torch::Tensor predict_pair(const torch::Tensor& e_head, const torch::Tensor& e_abd);
  /// All N x N head/abdomen combinations; entry (i, j) pairs head i with
  /// abdomen j. Uses the affine split w . [h; a] = w_h . h + w_a . a, so only
  /// 2N projections are needed.
  torch::Tensor pair_matrix(const torch::Tensor& e_head, const torch::Tensor& e_abd);

  torch::nn::Linear fc{nullptr};

 private:
  int64_t embedding_dim_;
};
TORCH_MODULE(PairHead);

/// The full two-site network: shared (or per-site) encoder and the pair head.
class FbwNetImpl : public torch::nn::Module {
 public:
  explicit FbwNetImpl(const NetworkConfig& cfg);

  /// Encodes a batch of one site. A disabled site yields zero embeddings
  /// without running an encoder.
  torch::Tensor encode(Site site, const torch::Tensor& x);

  /// Monolithic forward of row-aligned (head, abdomen) pairs -> (N,).
  torch::Tensor forward(const torch::Tensor& x_head, const torch::Tensor& x_abd);

  SiteEncoder encoder(Site site) const;
  const NetworkConfig& config() const { return cfg_; }

  /// Number of volumes pushed through an encoder since construction.
  int64_t encoded_volumes() const { return encoded_.load(); }
  void reset_counter() { encoded_ = 0; }

  PairHead head{nullptr};

 private:
  NetworkConfig cfg_;
  SiteEncoder head_encoder_{nullptr};
  SiteEncoder abd_encoder_{nullptr};
  std::atomic<int64_t> encoded_{0};
};
TORCH_MODULE(FbwNet);

/// Named parameters and buffers, e.g. for hashing or copying state.
std::vector<std::pair<std::string, torch::Tensor>> named_state(const torch::nn::Module& m);

/// Copies every parameter and buffer of `src` into `dst` (same architecture).
void copy_state(torch::nn::Module& dst, const torch::nn::Module& src);

/// Casts floating-point parameters and buffers to `dtype`; integer buffers such
/// as BatchNorm's batch counter keep their type.
void cast_floating(torch::nn::Module& m, torch::Dtype dtype);

}  // namespace fbw3d
