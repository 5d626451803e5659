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

#include "fbw3d/augment.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "fbw3d/errors.hpp"

namespace fbw3d {

using nlohmann::json;
using Mat3 = std::array<std::array<double, 3>, 3>;

void AugmentationConfig::validate() const {
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ConfigError("augmentation.flip_prob must be in [0, 1]");
  if (!(rotation_deg >= 0.0)) throw ConfigError("augmentation.rotation_deg must be >= 0");
  if (!(scale.lo > 0.0 && scale.lo <= scale.hi)) throw ConfigError("augmentation.scale must be a positive [lo, hi]");
  if (!(brightness >= 0.0)) throw ConfigError("augmentation.brightness must be >= 0");
  if (!(contrast.lo > 0.0 && contrast.lo <= contrast.hi)) {
    throw ConfigError("augmentation.contrast must be a positive [lo, hi]");
  }
}

json to_json(const AugmentationConfig& a) {
  return {{"enabled", a.enabled},
          {"flip_prob", a.flip_prob},
          {"rotation_deg", a.rotation_deg},
          {"scale", {a.scale.lo, a.scale.hi}},
          {"brightness", a.brightness},
          {"contrast", {a.contrast.lo, a.contrast.hi}}};
}

AugmentationConfig augmentation_from_json(const json& j) {
  AugmentationConfig a;
  auto pair = [](const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) throw ConfigError("augmentation." + key + " must be [lo, hi]");
    return Range{v[0].get<double>(), v[1].get<double>()};
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "enabled") a.enabled = value.get<bool>();
    else if (key == "flip_prob") a.flip_prob = value.get<double>();
    else if (key == "rotation_deg") a.rotation_deg = value.get<double>();
    else if (key == "scale") a.scale = pair(value, key);
    else if (key == "brightness") a.brightness = value.get<double>();
    else if (key == "contrast") a.contrast = pair(value, key);
    else throw ConfigError("unknown config key 'augmentation." + key + "'");
  }
  a.validate();
  return a;
}

namespace {

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

// Rodrigues rotation about a unit axis.
Mat3 rotation(const std::array<double, 3>& k, double angle) {
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  return {{{c + t * k[0] * k[0], t * k[0] * k[1] - s * k[2], t * k[0] * k[2] + s * k[1]},
           {t * k[1] * k[0] + s * k[2], c + t * k[1] * k[1], t * k[1] * k[2] - s * k[0]},
           {t * k[2] * k[0] - s * k[1], t * k[2] * k[1] + s * k[0], c + t * k[2] * k[2]}}};
}

}  // namespace

VolumeGrid augment_volume(const VolumeGrid& v, Rng& rng, const AugmentationConfig& cfg) {
  // Fixed draw order and count, whatever the configuration.
  std::array<bool, 3> flip{};
  for (auto& f : flip) f = rng.bernoulli(cfg.flip_prob);
  std::array<double, 3> axis{rng.normal(), rng.normal(), rng.normal()};
  const double angle_deg = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg);
  const double zoom = draw(rng, cfg.scale);
  const double offset = rng.uniform(-cfg.brightness, cfg.brightness);
  const double gain = draw(rng, cfg.contrast);

  VolumeGrid out = v;
  const bool geometric = flip[0] || flip[1] || flip[2] || angle_deg != 0.0 || zoom != 1.0;
  if (geometric) {
    double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (norm == 0.0) {
      axis = {1.0, 0.0, 0.0};
      norm = 1.0;
    }
    for (auto& a : axis) a /= norm;
    const Mat3 r = rotation(axis, angle_deg * std::numbers::pi / 180.0);

    // Output -> input map in normalized (d, h, w) coordinates:
    //   o_in = F * H^-1 * R^T * H * o_out / zoom, H = diag(half physical extent).
    const auto dims = v.dims();
    std::array<double, 3> half{};
    for (int a = 0; a < 3; ++a) half[a] = 0.5 * static_cast<double>(dims[a]) * v.spacing[a];
    Mat3 m{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        m[i][j] = (flip[i] ? -1.0 : 1.0) * r[j][i] * half[j] / half[i] / zoom;
      }
    }
    // affine_grid works in (x, y, z) = (w, h, d) order.
    auto theta = torch::zeros({1, 3, 4}, torch::kFloat32);
    auto acc = theta.accessor<float, 3>();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) acc[0][i][j] = static_cast<float>(m[2 - i][2 - j]);
    }
    namespace F = torch::nn::functional;
    auto input = v.voxels.unsqueeze(0).unsqueeze(0);
    auto grid = F::affine_grid(theta, {1, 1, dims[0], dims[1], dims[2]}, /*align_corners=*/false);
    out.voxels = F::grid_sample(input, grid,
                                F::GridSampleFuncOptions()
                                    .mode(torch::kBilinear)
                                    .padding_mode(torch::kZeros)
                                    .align_corners(false))
                     .squeeze(0)
                     .squeeze(0)
                     .contiguous();
    for (auto& s : out.spacing) s = static_cast<float>(static_cast<double>(s) / zoom);
  }

  if (offset != 0.0 || gain != 1.0) {
    const double lo = out.voxels.min().item<double>();
    const double hi = out.voxels.max().item<double>();
    const double mean = out.voxels.mean().item<double>();
    out.voxels = (out.voxels - mean) * gain + (mean + offset * (hi - lo));
  }
  return out;
}

FetalCase augment(const FetalCase& c, Rng& rng, const AugmentationConfig& cfg) {
  FetalCase out = c;
  out.head = augment_volume(c.head, rng, cfg);
  out.abdomen = augment_volume(c.abdomen, rng, cfg);
  return out;
}

}  // namespace fbw3d
