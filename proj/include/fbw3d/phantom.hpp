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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbw3d/datamodel.hpp"
#include "fbw3d/manifest.hpp"

namespace fbw3d {

/// Closed interval [lo, hi] for uniform draws; lo == hi collapses to a constant.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

using Semiaxes = std::array<double, 3>;

enum class Site { kHead, kAbdomen };

struct IntensityParams {
  double foreground_mean = 1.0;
  double background_mean = 0.1;
  double speckle = 0.3;           ///< multiplicative, fg * (1 + speckle * U(-1, 1))
  double background_noise = 0.05;  ///< additive, bg + noise * U(-1, 1)
};

/// One synthetic fetus: two centred, axis-aligned ellipsoids (mm).
struct PhantomSpec {
  Semiaxes head_semiaxes{};
  Semiaxes abd_semiaxes{};
  double growth_rate = 0.0;  ///< g/day
  uint64_t texture_seed = 0;
  IntensityParams intensity;
  double density_head = 2.72;  ///< g/cm^3
  double density_abd = 2.72;   ///< g/cm^3

  void validate() const;
};

struct PopulationParams {
  std::array<Range, 3> head_semiaxes{{{35, 55}, {35, 55}, {35, 55}}};
  std::array<Range, 3> abd_semiaxes{{{45, 70}, {45, 70}, {45, 70}}};
  double density_head = 2.72;
  double density_abd = 2.72;
  Range growth_rate{20, 30};
  IntensityParams intensity;
  /// Volumes are written at these dims with per-axis spacing drawn from spacing_range.
  Dims dims{64, 64, 64};
  Range spacing_range{2.3, 2.8};
  /// Rejection-sampling clip on the generated weight (g).
  Range weight_clip{1000, 4610};

  void validate() const;
};

PopulationParams population_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PopulationParams& p);
nlohmann::json to_json(const PhantomSpec& s);

/// Ellipsoid volume in cm^3 from semiaxes in mm.
double ellipsoid_volume_cm3(const Semiaxes& s);

double head_term(const PhantomSpec& s);
double abdomen_term(const PhantomSpec& s);
double growth_term(const PhantomSpec& s, int interval_days);

/// c_h V_head + c_a V_abd + growth_rate * days.
double true_weight(const PhantomSpec& spec, int interval_days);

/// Pseudo-weight of a synthetic fetus built from one spec's head and another's
/// abdomen; growth follows the head donor.
double mixed_weight(const PhantomSpec& head_donor, const PhantomSpec& abd_donor, int interval_days);

/// Head and abdomen semiaxes come from independent draws; deterministic in seed.
PhantomSpec sample_spec(uint64_t rng_seed, const PopulationParams& pop);

/// Voxelizes the head or abdomen ellipsoid of `spec`, centred in the field of view.
/// Throws GenerationError if the ellipsoid does not fit in dims * spacing.
VolumeGrid rasterize(const PhantomSpec& spec, Site site, const Spacing& spacing, const Dims& dims);

struct Biometrics {
  double hc_mm = 0.0;
  double ac_mm = 0.0;
  double bpd_mm = 0.0;
  double fl_mm = 0.0;
};

/// Ramanujan's first approximation to the perimeter of an ellipse.
double ramanujan_perimeter(double a, double b);

Biometrics biometrics(const PhantomSpec& spec);

struct SplitCounts {
  int64_t train = 0;
  int64_t val = 0;
  int64_t test = 0;
};

/// 7:1:2 split of n cases (val and test rounded, train takes the rest).
SplitCounts default_split_counts(int64_t n);

struct GeneratedCase {
  CaseRecord record;
  PhantomSpec spec;
  Spacing head_spacing{};
  Spacing abd_spacing{};
};

struct GeneratedDataset {
  std::filesystem::path manifest_path;
  std::vector<GeneratedCase> cases;
};

inline constexpr int64_t kMinPhantomCases = 10;

/// The case generate_dataset writes at `index`, without rasterizing: spec,
/// interval, clipped weight and spacings.
GeneratedCase sample_case(int64_t index, uint64_t seed, const PopulationParams& pop);

/// Writes n_cases phantom fetuses (volumes/, manifest.json and a phantom_specs.json
/// sidecar holding specs and biometrics). Each case's randomness derives from
/// (seed, case index), so the output bytes do not depend on thread count.
GeneratedDataset generate_dataset(int64_t n_cases, uint64_t seed, const PopulationParams& pop,
                                  const std::filesystem::path& out_dir,
                                  std::optional<SplitCounts> split = std::nullopt,
                                  int threads = 0);

/// Per-case specs and biometrics written next to a generated manifest.
struct PhantomSidecarEntry {
  PhantomSpec spec;
  Biometrics bio;
};
std::optional<std::vector<std::pair<std::string, PhantomSidecarEntry>>> read_phantom_sidecar(
    const std::filesystem::path& manifest_path);

}  // namespace fbw3d
