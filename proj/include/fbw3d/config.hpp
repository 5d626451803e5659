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

#include <json.hpp>

#include "fbw3d/ablation.hpp"
#include "fbw3d/augment.hpp"
#include "fbw3d/datamodel.hpp"
#include "fbw3d/network.hpp"
#include "fbw3d/schedule.hpp"

namespace fbw3d {

enum class EvalModel { kStudent, kTeacher };

std::string to_string(EvalModel m);
EvalModel parse_eval_model(const std::string& s);

/// Run configuration. JSON keys match the field names; nested objects are
/// "augmentation", "ssm" and "ablation". Unknown keys are rejected.
struct TrainConfig {
  int64_t epochs = 200;
  int64_t batch_size = 16;
  double base_lr = 1e-4;
  int64_t warmup_epochs = 5;
  double alpha = 0.001;
  double beta_end = 0.2;
  double m_start = 0.99;
  double m_end = 0.9999;
  uint64_t seed = 0;
  AugmentationConfig augmentation;
  double width_multiplier = 1.0;
  Dims input_dims{160, 128, 96};
  std::array<int64_t, 3> stem_kernel{3, 7, 7};
  SSMConfig ssm;
  AblationConfig ablation;
  EvalModel eval_model = EvalModel::kStudent;
  /// Intra-op threads for LibTorch; 0 keeps the library default.
  int threads = 0;

  void validate() const;
  NetworkConfig network() const;
  /// alpha with the rank-loss toggle applied.
  double effective_alpha() const;
  /// beta_end with the sslf toggle applied.
  double effective_beta_end() const;
  ScheduleParams schedule(int64_t steps_per_epoch) const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Throws ConfigError naming the offending key.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Seed precedence: explicit flag, then FBW3D_SEED, then the config value.
uint64_t resolve_seed(std::optional<uint64_t> flag, uint64_t config_seed);

}  // namespace fbw3d
