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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbw3d/ablation.hpp"
#include "fbw3d/baselines.hpp"
#include "fbw3d/config.hpp"
#include "fbw3d/manifest.hpp"
#include "fbw3d/metrics.hpp"

namespace fbw3d {

struct MethodRow {
  std::string method;
  MetricReport metrics;
};

struct CasePrediction {
  std::string case_id;
  double true_g = 0.0;
  double model_g = 0.0;
  std::optional<double> hadlock_g;
  std::optional<double> intergrowth_g;
};

struct EvaluationReport {
  std::string split;
  std::string model;
  std::string ablation;
  std::string hadlock_variant;
  std::vector<MethodRow> rows;
  std::vector<CasePrediction> cases;
};

struct EvalOptions {
  Split split = Split::kTest;
  std::optional<EvalModel> model;  ///< defaults to the checkpoint's eval_model
  std::optional<std::string> hadlock_variant;
  std::filesystem::path formulas = default_formula_path();
};

/// Name of the ablation row whose toggles equal `a`, or "custom".
std::string ablation_name(const AblationConfig& a);

/// Runs a checkpoint on one labeled split. Baseline rows are added when the
/// dataset carries a phantom biometrics sidecar. A missing checkpoint is a
/// ConfigError.
EvaluationReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                     const std::filesystem::path& manifest_path, const EvalOptions& opts);

nlohmann::json to_json(const EvaluationReport& r);

/// Aligned table with columns Method, MAE (g), RMSE (g), MAPE (%).
std::string format_table(const std::vector<MethodRow>& rows);

struct AblationResult {
  AblationRow row;
  MetricReport test;
  std::filesystem::path checkpoint;
};

struct AblateOptions {
  std::filesystem::path out_dir;
  std::optional<int64_t> epochs;
  bool verbose = false;
};

/// Trains and tests each row with `base` as the shared configuration. All
/// rows are validated before any training starts.
std::vector<AblationResult> run_ablation(const std::filesystem::path& manifest_path, const TrainConfig& base,
                                         const std::vector<AblationRow>& rows, const AblateOptions& opts);

nlohmann::json to_json(const std::vector<AblationResult>& results);

/// Columns 3DR18, WS, FF, CA, SA, RL, SSLF, Head, Abdomen, MAE, MAPE.
std::string format_ablation_table(const std::vector<AblationResult>& results);

}  // namespace fbw3d
