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

#include <string>
#include <vector>

#include <json.hpp>

namespace fbw3d {

/// Component toggles of the ablation grid; all true is the full method.
struct AblationConfig {
  bool weight_sharing = true;
  bool feature_fusion = true;
  bool channel_attention = true;
  bool spatial_attention = true;
  bool rank_loss = true;
  bool sslf = true;
  bool head_input = true;
  bool abdomen_input = true;

  /// Throws ConfigError for combinations that cannot be trained.
  void validate(int64_t batch_size) const;
  bool operator==(const AblationConfig&) const = default;
};

nlohmann::json to_json(const AblationConfig& a);
AblationConfig ablation_from_json(const nlohmann::json& j);

/// Applies comma-separated toggle tokens to `base`: no-ws, no-ff, no-ca, no-sa,
/// no-rl, no-sslf, head-only, abdomen-only.
AblationConfig apply_ablation_tokens(AblationConfig base, const std::string& tokens);

struct AblationRow {
  std::string name;
  AblationConfig toggles;
};

/// The nine rows of the component ablation, from single-site plain backbone
/// up to the full method.
std::vector<AblationRow> ablation_grid();

/// Looks up a row by name ("head-only", "abdomen-only", "3dr18", "ws", "ws-ff",
/// "ws-ff-ca", "ws-ff-ca-sa", "mffn" (alias "no-sslf"), "full").
AblationRow ablation_row(const std::string& name);

}  // namespace fbw3d
