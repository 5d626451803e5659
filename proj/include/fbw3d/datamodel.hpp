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
#include <cstdint>
#include <optional>
#include <string>

#include <torch/torch.h>

namespace fbw3d {

/// Millimetres per voxel along (depth, height, width).
using Spacing = std::array<float, 3>;

/// Volume extent in voxels, (D, H, W).
using Dims = std::array<int64_t, 3>;

/// A 3D scalar image with physical voxel spacing.
///
/// `voxels` is a contiguous float32 tensor of shape (D, H, W). Operations in
/// this library never mutate a grid in place; they return new grids.
struct VolumeGrid {
  torch::Tensor voxels;
  Spacing spacing{1.0f, 1.0f, 1.0f};

  Dims dims() const;
  /// Throws DomainError when any invariant (positive spacing, non-empty,
  /// finite voxels, rank 3 float32) does not hold.
  void validate() const;
};

struct FetalCase {
  std::string case_id;
  VolumeGrid head;
  VolumeGrid abdomen;
  int interval_days = 0;
  std::optional<double> weight_g;
};

/// Fixed-bound min-max map from grams to [0, 1].
struct WeightNormalizer {
  double w_min = 0.0;
  double w_max = 5000.0;

  /// Throws RangeError naming the violated bound when w is outside [w_min, w_max].
  double normalize(double w) const;
  double denormalize(double y) const;
  void validate() const;
};

inline constexpr int kMaxIntervalDays = 3;
inline constexpr int64_t kInputChannels = 5;

void validate_interval(int interval_days);

/// Builds the five-channel network input (5, D, H, W): image, three constant
/// spacing planes in millimetres and a constant interval plane at days / 3.
torch::Tensor assemble_input(const VolumeGrid& v, int interval_days);

/// Aspect-preserving resize: one isotropic factor f = min(target / source),
/// trilinear resampling, symmetric zero padding. Output spacing is
/// source spacing / f so physical extent of the content is kept.
VolumeGrid resize_volume(const VolumeGrid& v, const Dims& target);

}  // namespace fbw3d
