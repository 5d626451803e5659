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

#include "fbw3d/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbw3d/errors.hpp"

namespace fbw3d {

Dims VolumeGrid::dims() const {
  return {voxels.size(0), voxels.size(1), voxels.size(2)};
}

void VolumeGrid::validate() const {
  if (!voxels.defined() || voxels.dim() != 3) {
    throw DomainError("volume must be a rank-3 tensor");
  }
  if (voxels.scalar_type() != torch::kFloat32) {
    throw DomainError("volume voxels must be float32");
  }
  for (int64_t d : dims()) {
    if (d < 1) throw DomainError("volume dimensions must be >= 1");
  }
  for (float s : spacing) {
    if (!(s > 0.0f) || !std::isfinite(s)) {
      throw DomainError("volume spacing components must be positive and finite");
    }
  }
  if (!torch::isfinite(voxels).all().item<bool>()) {
    throw DomainError("volume contains non-finite voxels");
  }
}

double WeightNormalizer::normalize(double w) const {
  if (w < w_min) {
    std::ostringstream msg;
    msg << "weight " << w << " g is below w_min=" << w_min << " g";
    throw RangeError(msg.str());
  }
  if (w > w_max) {
    std::ostringstream msg;
    msg << "weight " << w << " g is above w_max=" << w_max << " g";
    throw RangeError(msg.str());
  }
  return (w - w_min) / (w_max - w_min);
}

double WeightNormalizer::denormalize(double y) const {
  return w_min + y * (w_max - w_min);
}

void WeightNormalizer::validate() const {
  if (!(w_min < w_max)) throw DomainError("normalizer requires w_min < w_max");
}

void validate_interval(int interval_days) {
  if (interval_days < 0 || interval_days > kMaxIntervalDays) {
    throw DomainError("interval_days must be in {0,1,2,3}, got " +
                      std::to_string(interval_days));
  }
}

torch::Tensor assemble_input(const VolumeGrid& v, int interval_days) {
  validate_interval(interval_days);
  const auto [d, h, w] = v.dims();
  auto out = torch::empty({kInputChannels, d, h, w}, torch::kFloat32);
  out[0].copy_(v.voxels);
  for (int axis = 0; axis < 3; ++axis) {
    out[1 + axis].fill_(v.spacing[axis]);
  }
  out[4].fill_(static_cast<float>(interval_days) / static_cast<float>(kMaxIntervalDays));
  return out;
}

VolumeGrid resize_volume(const VolumeGrid& v, const Dims& target) {
  for (int64_t t : target) {
    if (t < 1) throw DomainError("resize target dimensions must be >= 1");
  }
  const Dims src = v.dims();
  double f = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    f = std::min(f, static_cast<double>(target[a]) / static_cast<double>(src[a]));
  }

  Dims content{};
  for (int a = 0; a < 3; ++a) {
    const auto n = static_cast<int64_t>(std::llround(static_cast<double>(src[a]) * f));
    content[a] = std::clamp<int64_t>(n, 1, target[a]);
  }

  torch::Tensor scaled;
  if (content == src) {
    scaled = v.voxels;
  } else {
    namespace F = torch::nn::functional;
    scaled = F::interpolate(v.voxels.unsqueeze(0).unsqueeze(0),
                            F::InterpolateFuncOptions()
                                .size(std::vector<int64_t>(content.begin(), content.end()))
                                .mode(torch::kTrilinear)
                                .align_corners(false))
                 .squeeze(0)
                 .squeeze(0);
  }

  VolumeGrid out;
  if (content == target) {
    out.voxels = scaled.contiguous().clone();
  } else {
    out.voxels = torch::zeros({target[0], target[1], target[2]}, torch::kFloat32);
    const int64_t off_d = (target[0] - content[0]) / 2;
    const int64_t off_h = (target[1] - content[1]) / 2;
    const int64_t off_w = (target[2] - content[2]) / 2;
    using torch::indexing::Slice;
    out.voxels
        .index({Slice(off_d, off_d + content[0]), Slice(off_h, off_h + content[1]),
                Slice(off_w, off_w + content[2])})
        .copy_(scaled);
  }
  for (int a = 0; a < 3; ++a) {
    out.spacing[a] = static_cast<float>(static_cast<double>(v.spacing[a]) / f);
  }
  return out;
}

}  // namespace fbw3d
