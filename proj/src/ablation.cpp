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

#include "fbw3d/ablation.hpp"

#include <sstream>

#include "fbw3d/errors.hpp"

namespace fbw3d {

using nlohmann::json;

void AblationConfig::validate(int64_t batch_size) const {
  if (!head_input && !abdomen_input) {
    throw ConfigError("ablation disables both head and abdomen input; at least one site is required");
  }
  if (sslf && (!head_input || !abdomen_input)) {
    throw ConfigError("sslf mixes heads with abdomens of other fetuses and needs both input sites");
  }
  if (sslf && batch_size < 2) {
    throw ConfigError("sslf needs batch_size >= 2 to form synthetic pairs");
  }
}

json to_json(const AblationConfig& a) {
  return {{"weight_sharing", a.weight_sharing}, {"feature_fusion", a.feature_fusion},
          {"channel_attention", a.channel_attention}, {"spatial_attention", a.spatial_attention},
          {"rank_loss", a.rank_loss}, {"sslf", a.sslf},
          {"head_input", a.head_input}, {"abdomen_input", a.abdomen_input}};
}

AblationConfig ablation_from_json(const json& j) {
  AblationConfig a;
  for (const auto& [key, value] : j.items()) {
    bool* field = nullptr;
    if (key == "weight_sharing") field = &a.weight_sharing;
    else if (key == "feature_fusion") field = &a.feature_fusion;
    else if (key == "channel_attention") field = &a.channel_attention;
    else if (key == "spatial_attention") field = &a.spatial_attention;
    else if (key == "rank_loss") field = &a.rank_loss;
    else if (key == "sslf") field = &a.sslf;
    else if (key == "head_input") field = &a.head_input;
    else if (key == "abdomen_input") field = &a.abdomen_input;
    else throw ConfigError("unknown config key 'ablation." + key + "'");
    *field = value.get<bool>();
  }
  return a;
}

AblationConfig apply_ablation_tokens(AblationConfig base, const std::string& tokens) {
  std::stringstream ss(tokens);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "no-ws") base.weight_sharing = false;
    else if (tok == "no-ff") base.feature_fusion = false;
    else if (tok == "no-ca") base.channel_attention = false;
    else if (tok == "no-sa") base.spatial_attention = false;
    else if (tok == "no-rl") base.rank_loss = false;
    else if (tok == "no-sslf") base.sslf = false;
    else if (tok == "head-only") base.abdomen_input = false;
    else if (tok == "abdomen-only") base.head_input = false;
    else throw ConfigError("unknown ablation toggle '" + tok + "'");
  }
  return base;
}

std::vector<AblationRow> ablation_grid() {
  const AblationConfig none{false, false, false, false, false, false, true, true};
  std::vector<AblationRow> rows;
  auto head_only = none;
  head_only.abdomen_input = false;
  rows.push_back({"head-only", head_only});
  auto abd_only = none;
  abd_only.head_input = false;
  rows.push_back({"abdomen-only", abd_only});
  rows.push_back({"3dr18", none});
  auto r = none;
  r.weight_sharing = true;
  rows.push_back({"ws", r});
  r.feature_fusion = true;
  rows.push_back({"ws-ff", r});
  r.channel_attention = true;
  rows.push_back({"ws-ff-ca", r});
  r.spatial_attention = true;
  rows.push_back({"ws-ff-ca-sa", r});
  r.rank_loss = true;
  rows.push_back({"mffn", r});
  r.sslf = true;
  rows.push_back({"full", r});
  return rows;
}

AblationRow ablation_row(const std::string& name) {
  const std::string key = name == "no-sslf" ? "mffn" : name;
  for (auto& row : ablation_grid()) {
    if (row.name == key) return row;
  }
  throw ConfigError("unknown ablation row '" + name + "'");
}

}  // namespace fbw3d
