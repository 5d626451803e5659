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

#include "fbw3d/datamodel.hpp"

namespace fbw3d {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split parse_split(const std::string& s);

/// One entry of the dataset manifest. Volume paths are stored as written in
/// the manifest; relative paths resolve against the manifest's directory.
struct CaseRecord {
  std::string case_id;
  std::string head_path;
  std::string abdomen_path;
  int interval_days = 0;
  std::optional<double> weight_g;
  Split split = Split::kTrain;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<CaseRecord> cases;

  std::vector<CaseRecord> select(Split s) const;
  std::filesystem::path resolve(const std::string& p) const;
  /// Loads both volumes of a record into a FetalCase.
  FetalCase load_case(const CaseRecord& r) const;
};

/// Reads the JSON array manifest; throws DataError on schema violations.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<CaseRecord>& cases, const std::filesystem::path& path);

}  // namespace fbw3d
