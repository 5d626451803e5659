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

#include "fbw3d/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "fbw3d/errors.hpp"

namespace fbw3d {
namespace {

void put_u32(std::vector<unsigned char>& buf, uint32_t value) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

void put_f32(std::vector<unsigned char>& buf, float value) {
  put_u32(buf, std::bit_cast<uint32_t>(value));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

constexpr size_t kHeaderBytes = 4 + 4 + 3 * 4 + 3 * 4;

}  // namespace

void write_volume(const VolumeGrid& v, const std::filesystem::path& path) {
  v.validate();
  const auto [d, h, w] = v.dims();
  const auto voxels = v.voxels.contiguous();
  const auto count = static_cast<size_t>(voxels.numel());

  std::vector<unsigned char> buf;
  buf.reserve(kHeaderBytes + 4 * count);
  buf.insert(buf.end(), std::begin(kVolumeMagic), std::end(kVolumeMagic));
  put_u32(buf, kVolumeVersion);
  put_u32(buf, static_cast<uint32_t>(d));
  put_u32(buf, static_cast<uint32_t>(h));
  put_u32(buf, static_cast<uint32_t>(w));
  for (float s : v.spacing) put_f32(buf, s);
  const float* data = voxels.data_ptr<float>();
  if constexpr (std::endian::native == std::endian::little) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    buf.insert(buf.end(), bytes, bytes + 4 * count);
  } else {
    for (size_t i = 0; i < count; ++i) put_f32(buf, data[i]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open volume file for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing volume file: " + path.string());
}

VolumeGrid read_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open volume file: " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kVolumeMagic, 4) != 0) {
    throw DataError("not an FBWV volume file: " + path.string());
  }
  const uint32_t version = get_u32(buf.data() + 4);
  if (version != kVolumeVersion) {
    throw DataError("unsupported FBWV version " + std::to_string(version) + " in " + path.string());
  }
  const int64_t d = get_u32(buf.data() + 8);
  const int64_t h = get_u32(buf.data() + 12);
  const int64_t w = get_u32(buf.data() + 16);
  const size_t count = static_cast<size_t>(d * h * w);
  if (buf.size() != kHeaderBytes + 4 * count) {
    throw DataError("FBWV payload size mismatch in " + path.string());
  }

  VolumeGrid v;
  for (int a = 0; a < 3; ++a) v.spacing[a] = get_f32(buf.data() + 20 + 4 * a);
  v.voxels = torch::empty({d, h, w}, torch::kFloat32);
  float* data = v.voxels.data_ptr<float>();
  const unsigned char* payload = buf.data() + kHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data, payload, 4 * count);
  } else {
    for (size_t i = 0; i < count; ++i) data[i] = get_f32(payload + 4 * i);
  }
  v.validate();
  return v;
}

}  // namespace fbw3d
