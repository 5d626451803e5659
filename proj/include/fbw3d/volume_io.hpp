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

#include <filesystem>

#include "fbw3d/datamodel.hpp"

namespace fbw3d {

// On-disk volume layout, little-endian throughout:
//   "FBWV" | u32 version (1) | u32 D | u32 H | u32 W | f32 spacing[3] | f32 voxels[D*H*W]
// Voxels are row-major with D outermost and W fastest.
inline constexpr char kVolumeMagic[4] = {'F', 'B', 'W', 'V'};
inline constexpr uint32_t kVolumeVersion = 1;

void write_volume(const VolumeGrid& v, const std::filesystem::path& path);
VolumeGrid read_volume(const std::filesystem::path& path);

}  // namespace fbw3d
