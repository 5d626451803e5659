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

#include "fbw3d/phantom.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "fbw3d/errors.hpp"
#include "fbw3d/rng.hpp"
#include "fbw3d/volume_io.hpp"

namespace fbw3d {

using nlohmann::json;

namespace {

void check_range(const Range& r, const char* what, bool positive) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw DomainError(std::string("population range '") + what + "' must satisfy lo <= hi");
  }
  if (positive && !(r.lo > 0.0)) {
    throw DomainError(std::string("population range '") + what + "' must be positive");
  }
}

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

Range range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("ranges are written as [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json range_to_json(const Range& r) { return json::array({r.lo, r.hi}); }

constexpr uint64_t kSiteSalt[2] = {0x4845414455ULL, 0x4142444f4dULL};
constexpr uint64_t kFemurSalt = 0x46454d5552ULL;
constexpr uint64_t kSplitSalt = 0x53504c4954ULL;

}  // namespace

void PhantomSpec::validate() const {
  for (double a : head_semiaxes) {
    if (!(a > 0.0)) throw DomainError("head semiaxes must be positive");
  }
  for (double a : abd_semiaxes) {
    if (!(a > 0.0)) throw DomainError("abdomen semiaxes must be positive");
  }
  if (!(growth_rate >= 0.0)) throw DomainError("growth_rate must be >= 0");
  if (!(density_head > 0.0) || !(density_abd > 0.0)) throw DomainError("densities must be positive");
}

void PopulationParams::validate() const {
  for (const auto& r : head_semiaxes) check_range(r, "head_semiaxes", true);
  for (const auto& r : abd_semiaxes) check_range(r, "abd_semiaxes", true);
  check_range(growth_rate, "growth_rate", false);
  if (growth_rate.lo < 0.0) throw DomainError("growth_rate range must be non-negative");
  check_range(spacing_range, "spacing_range", true);
  check_range(weight_clip, "weight_clip", false);
  if (!(density_head > 0.0) || !(density_abd > 0.0)) throw DomainError("densities must be positive");
  for (int64_t d : dims) {
    if (d < 1) throw DomainError("phantom dims must be >= 1");
  }
}

PopulationParams population_from_json(const json& j) {
  PopulationParams p;
  for (const auto& [key, value] : j.items()) {
    if (key == "head_semiaxes" || key == "abd_semiaxes") {
      auto& target = key == "head_semiaxes" ? p.head_semiaxes : p.abd_semiaxes;
      if (!value.is_array() || value.size() != 3) throw ConfigError(key + " needs three [lo, hi] ranges");
      for (int a = 0; a < 3; ++a) target[a] = range_from_json(value[a]);
    } else if (key == "density_head") {
      p.density_head = value.get<double>();
    } else if (key == "density_abd") {
      p.density_abd = value.get<double>();
    } else if (key == "growth_rate") {
      p.growth_rate = range_from_json(value);
    } else if (key == "foreground_mean") {
      p.intensity.foreground_mean = value.get<double>();
    } else if (key == "background_mean") {
      p.intensity.background_mean = value.get<double>();
    } else if (key == "speckle") {
      p.intensity.speckle = value.get<double>();
    } else if (key == "background_noise") {
      p.intensity.background_noise = value.get<double>();
    } else if (key == "dims") {
      for (int a = 0; a < 3; ++a) p.dims[a] = value.at(a).get<int64_t>();
    } else if (key == "spacing_range") {
      p.spacing_range = range_from_json(value);
    } else if (key == "weight_clip") {
      p.weight_clip = range_from_json(value);
    } else {
      throw ConfigError("unknown population key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

json to_json(const PopulationParams& p) {
  json head = json::array(), abd = json::array();
  for (int a = 0; a < 3; ++a) {
    head.push_back(range_to_json(p.head_semiaxes[a]));
    abd.push_back(range_to_json(p.abd_semiaxes[a]));
  }
  return {{"head_semiaxes", head},
          {"abd_semiaxes", abd},
          {"density_head", p.density_head},
          {"density_abd", p.density_abd},
          {"growth_rate", range_to_json(p.growth_rate)},
          {"foreground_mean", p.intensity.foreground_mean},
          {"background_mean", p.intensity.background_mean},
          {"speckle", p.intensity.speckle},
          {"background_noise", p.intensity.background_noise},
          {"dims", json::array({p.dims[0], p.dims[1], p.dims[2]})},
          {"spacing_range", range_to_json(p.spacing_range)},
          {"weight_clip", range_to_json(p.weight_clip)}};
}

json to_json(const PhantomSpec& s) {
  return {{"head_semiaxes", s.head_semiaxes},
          {"abd_semiaxes", s.abd_semiaxes},
          {"growth_rate", s.growth_rate},
          {"texture_seed", s.texture_seed},
          {"density_head", s.density_head},
          {"density_abd", s.density_abd},
          {"intensity",
           {s.intensity.foreground_mean, s.intensity.background_mean, s.intensity.speckle,
            s.intensity.background_noise}}};
}

namespace {

PhantomSpec spec_from_json(const json& j) {
  PhantomSpec s;
  s.head_semiaxes = j.at("head_semiaxes").get<Semiaxes>();
  s.abd_semiaxes = j.at("abd_semiaxes").get<Semiaxes>();
  s.growth_rate = j.at("growth_rate").get<double>();
  s.texture_seed = j.at("texture_seed").get<uint64_t>();
  s.density_head = j.at("density_head").get<double>();
  s.density_abd = j.at("density_abd").get<double>();
  const auto& in = j.at("intensity");
  s.intensity = {in.at(0).get<double>(), in.at(1).get<double>(), in.at(2).get<double>(),
                 in.at(3).get<double>()};
  return s;
}

}  // namespace

double ellipsoid_volume_cm3(const Semiaxes& s) {
  return 4.0 / 3.0 * std::numbers::pi * s[0] * s[1] * s[2] / 1000.0;
}

double head_term(const PhantomSpec& s) { return s.density_head * ellipsoid_volume_cm3(s.head_semiaxes); }

double abdomen_term(const PhantomSpec& s) { return s.density_abd * ellipsoid_volume_cm3(s.abd_semiaxes); }

double growth_term(const PhantomSpec& s, int interval_days) {
  validate_interval(interval_days);
  return s.growth_rate * interval_days;
}

double true_weight(const PhantomSpec& spec, int interval_days) {
  return head_term(spec) + abdomen_term(spec) + growth_term(spec, interval_days);
}

double mixed_weight(const PhantomSpec& head_donor, const PhantomSpec& abd_donor, int interval_days) {
  return head_term(head_donor) + abdomen_term(abd_donor) + growth_term(head_donor, interval_days);
}

PhantomSpec sample_spec(uint64_t rng_seed, const PopulationParams& pop) {
  pop.validate();
  // Separate streams for the two sites make their sizes independent by construction.
  Rng head_rng(derive_seed({rng_seed, kSiteSalt[0]}));
  Rng abd_rng(derive_seed({rng_seed, kSiteSalt[1]}));
  Rng misc_rng(derive_seed({rng_seed, 0}));

  PhantomSpec s;
  for (int a = 0; a < 3; ++a) {
    s.head_semiaxes[a] = draw(head_rng, pop.head_semiaxes[a]);
    s.abd_semiaxes[a] = draw(abd_rng, pop.abd_semiaxes[a]);
  }
  s.growth_rate = draw(misc_rng, pop.growth_rate);
  s.texture_seed = misc_rng.next();
  s.intensity = pop.intensity;
  s.density_head = pop.density_head;
  s.density_abd = pop.density_abd;
  return s;
}

VolumeGrid rasterize(const PhantomSpec& spec, Site site, const Spacing& spacing, const Dims& dims) {
  spec.validate();
  const Semiaxes& axes = site == Site::kHead ? spec.head_semiaxes : spec.abd_semiaxes;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1 || !(spacing[a] > 0.0f)) throw DomainError("rasterize needs positive dims and spacing");
    const double half_fov = 0.5 * static_cast<double>(dims[a]) * spacing[a];
    if (axes[a] > half_fov) {
      std::ostringstream msg;
      msg << "ellipsoid semiaxis " << axes[a] << " mm exceeds half field of view " << half_fov
          << " mm on axis " << a;
      throw GenerationError(msg.str());
    }
  }

  VolumeGrid v;
  v.spacing = spacing;
  v.voxels = torch::empty({dims[0], dims[1], dims[2]}, torch::kFloat32);
  float* out = v.voxels.data_ptr<float>();

  const auto& in = spec.intensity;
  Rng noise(derive_seed({spec.texture_seed, kSiteSalt[site == Site::kHead ? 0 : 1]}));
  const double inv2[3] = {1.0 / (axes[0] * axes[0]), 1.0 / (axes[1] * axes[1]), 1.0 / (axes[2] * axes[2])};

  int64_t idx = 0;
  for (int64_t i = 0; i < dims[0]; ++i) {
    const double z = (static_cast<double>(i) + 0.5 - 0.5 * static_cast<double>(dims[0])) * spacing[0];
    const double rz = z * z * inv2[0];
    for (int64_t j = 0; j < dims[1]; ++j) {
      const double y = (static_cast<double>(j) + 0.5 - 0.5 * static_cast<double>(dims[1])) * spacing[1];
      const double ry = rz + y * y * inv2[1];
      for (int64_t k = 0; k < dims[2]; ++k, ++idx) {
        const double x = (static_cast<double>(k) + 0.5 - 0.5 * static_cast<double>(dims[2])) * spacing[2];
        const double r = ry + x * x * inv2[2];
        const double u = in.speckle > 0.0 || in.background_noise > 0.0 ? noise.uniform(-1.0, 1.0) : 0.0;
        out[idx] = r <= 1.0 ? static_cast<float>(in.foreground_mean * (1.0 + in.speckle * u))
                            : static_cast<float>(in.background_mean + in.background_noise * u);
      }
    }
  }
  return v;
}

double ramanujan_perimeter(double a, double b) {
  return std::numbers::pi * (3.0 * (a + b) - std::sqrt((3.0 * a + b) * (a + 3.0 * b)));
}

Biometrics biometrics(const PhantomSpec& spec) {
  spec.validate();
  Semiaxes head = spec.head_semiaxes;
  Semiaxes abd = spec.abd_semiaxes;
  std::sort(head.begin(), head.end());
  std::sort(abd.begin(), abd.end());

  Biometrics b;
  b.hc_mm = ramanujan_perimeter(head[0], head[2]);
  b.ac_mm = ramanujan_perimeter(abd[0], abd[1]);
  b.bpd_mm = 2.0 * head[0];
  Rng femur(derive_seed({spec.texture_seed, kFemurSalt}));
  b.fl_mm = 0.22 * b.hc_mm * (1.0 + femur.uniform(-0.05, 0.05));
  return b;
}

SplitCounts default_split_counts(int64_t n) {
  SplitCounts c;
  c.val = std::llround(0.1 * static_cast<double>(n));
  c.test = std::llround(0.2 * static_cast<double>(n));
  c.train = n - c.val - c.test;
  return c;
}

namespace {

GeneratedCase generate_case(int64_t index, uint64_t seed, const PopulationParams& pop, int id_width) {
  Rng rng(derive_seed({seed, static_cast<uint64_t>(index)}));
  GeneratedCase gc;
  double weight = 0.0;
  int attempts = 0;
  for (;;) {
    gc.spec = sample_spec(rng.next(), pop);
    gc.record.interval_days = static_cast<int>(rng.below(kMaxIntervalDays + 1));
    weight = true_weight(gc.spec, gc.record.interval_days);
    if (weight >= pop.weight_clip.lo && weight <= pop.weight_clip.hi) break;
    if (++attempts > 100000) throw GenerationError("weight clip range rejects every sampled phantom");
  }
  for (int a = 0; a < 3; ++a) {
    gc.head_spacing[a] = static_cast<float>(draw(rng, pop.spacing_range));
    gc.abd_spacing[a] = static_cast<float>(draw(rng, pop.spacing_range));
  }

  std::ostringstream id;
  id << "case_" << std::setw(id_width) << std::setfill('0') << index;
  gc.record.case_id = id.str();
  gc.record.head_path = "volumes/" + gc.record.case_id + "_head.fbwv";
  gc.record.abdomen_path = "volumes/" + gc.record.case_id + "_abdomen.fbwv";
  gc.record.weight_g = weight;
  return gc;
}

}  // namespace

GeneratedCase sample_case(int64_t index, uint64_t seed, const PopulationParams& pop) {
  pop.validate();
  return generate_case(index, seed, pop, 4);
}

GeneratedDataset generate_dataset(int64_t n_cases, uint64_t seed, const PopulationParams& pop,
                                  const std::filesystem::path& out_dir, std::optional<SplitCounts> split,
                                  int threads) {
  if (n_cases < kMinPhantomCases) {
    throw DomainError("phantom datasets need at least " + std::to_string(kMinPhantomCases) + " cases, got " +
                      std::to_string(n_cases));
  }
  pop.validate();
  const SplitCounts counts = split.value_or(default_split_counts(n_cases));
  if (counts.train < 0 || counts.val < 0 || counts.test < 0 ||
      counts.train + counts.val + counts.test != n_cases) {
    throw DomainError("split counts must be non-negative and sum to n_cases");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "volumes", ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const int id_width = std::max<int>(4, static_cast<int>(std::to_string(n_cases - 1).size()));
  GeneratedDataset ds;
  ds.cases.resize(static_cast<size_t>(n_cases));

  std::atomic<int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (int64_t i = next++; i < n_cases; i = next++) {
      try {
        GeneratedCase gc = generate_case(i, seed, pop, id_width);
        write_volume(rasterize(gc.spec, Site::kHead, gc.head_spacing, pop.dims), out_dir / gc.record.head_path);
        write_volume(rasterize(gc.spec, Site::kAbdomen, gc.abd_spacing, pop.dims),
                     out_dir / gc.record.abdomen_path);
        ds.cases[static_cast<size_t>(i)] = std::move(gc);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  // Seeded Fisher-Yates permutation decides split membership.
  std::vector<int64_t> order(static_cast<size_t>(n_cases));
  for (int64_t i = 0; i < n_cases; ++i) order[static_cast<size_t>(i)] = i;
  Rng shuffle(derive_seed({seed, kSplitSalt}));
  for (int64_t i = n_cases - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(shuffle.below(static_cast<uint64_t>(i + 1)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  for (int64_t r = 0; r < n_cases; ++r) {
    auto& rec = ds.cases[static_cast<size_t>(order[static_cast<size_t>(r)])].record;
    rec.split = r < counts.train ? Split::kTrain : (r < counts.train + counts.val ? Split::kVal : Split::kTest);
  }

  std::vector<CaseRecord> records;
  json sidecar = json::array();
  for (const auto& gc : ds.cases) {
    records.push_back(gc.record);
    const Biometrics b = biometrics(gc.spec);
    sidecar.push_back({{"case_id", gc.record.case_id},
                       {"spec", to_json(gc.spec)},
                       {"biometrics", {{"hc_mm", b.hc_mm}, {"ac_mm", b.ac_mm}, {"bpd_mm", b.bpd_mm}, {"fl_mm", b.fl_mm}}}});
  }
  ds.manifest_path = out_dir / "manifest.json";
  write_manifest(records, ds.manifest_path);
  std::ofstream side(out_dir / "phantom_specs.json", std::ios::trunc);
  if (!side) throw IoError("cannot write phantom sidecar in " + out_dir.string());
  side << sidecar.dump(2) << '\n';
  return ds;
}

std::optional<std::vector<std::pair<std::string, PhantomSidecarEntry>>> read_phantom_sidecar(
    const std::filesystem::path& manifest_path) {
  const auto path = manifest_path.parent_path() / "phantom_specs.json";
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<std::pair<std::string, PhantomSidecarEntry>> out;
  try {
    const json doc = json::parse(in);
    for (const auto& item : doc) {
      PhantomSidecarEntry e;
      e.spec = spec_from_json(item.at("spec"));
      const auto& b = item.at("biometrics");
      e.bio = {b.at("hc_mm").get<double>(), b.at("ac_mm").get<double>(), b.at("bpd_mm").get<double>(),
               b.at("fl_mm").get<double>()};
      out.emplace_back(item.at("case_id").get<std::string>(), e);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed phantom sidecar " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace fbw3d
