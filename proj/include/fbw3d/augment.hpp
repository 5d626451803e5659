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

#include <json.hpp>

#include "fbw3d/datamodel.hpp"
#include "fbw3d/phantom.hpp"
#include "fbw3d/rng.hpp"

namespace fbw3d {

struct AugmentationConfig {
  bool enabled = true;
  double flip_prob = 0.5;
  double rotation_deg = 15.0;  ///< uniform in [-rotation_deg, rotation_deg] about a random axis
  Range scale{0.9, 1.1};       ///< isotropic zoom; spacing is divided by the factor
  double brightness = 0.1;     ///< offset, fraction of the volume's dynamic range
  Range contrast{0.9, 1.1};    ///< gain about the volume mean

  void validate() const;
};

nlohmann::json to_json(const AugmentationConfig& a);
AugmentationConfig augmentation_from_json(const nlohmann::json& j);

/// Draws one random transform and applies it. A transform that is exactly the
/// identity (no flip, zero angle, unit scale, zero offset, unit gain) leaves
/// the voxels bit-identical.
VolumeGrid augment_volume(const VolumeGrid& v, Rng& rng, const AugmentationConfig& cfg);

/// Head and abdomen get independent transforms; label and interval are kept.
FetalCase augment(const FetalCase& c, Rng& rng, const AugmentationConfig& cfg);

}  // namespace fbw3d
