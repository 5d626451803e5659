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

#include "fbw3d/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "fbw3d/errors.hpp"
#include "fbw3d/volume_io.hpp"

namespace fbw3d {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw DomainError("unknown split '" + s + "' (expected train, val or test)");
}

std::vector<CaseRecord> Manifest::select(Split s) const {
  std::vector<CaseRecord> out;
  for (const auto& c : cases) {
    if (c.split == s) out.push_back(c);
  }
  return out;
}

std::filesystem::path Manifest::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

FetalCase Manifest::load_case(const CaseRecord& r) const {
  FetalCase c;
  c.case_id = r.case_id;
  c.head = read_volume(resolve(r.head_path));
  c.abdomen = read_volume(resolve(r.abdomen_path));
  c.interval_days = r.interval_days;
  c.weight_g = r.weight_g;
  return c;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_array()) throw DataError("manifest must be a JSON array of case records");

  Manifest m;
  m.base_dir = path.parent_path();
  for (const auto& item : doc) {
    try {
      CaseRecord r;
      r.case_id = item.at("case_id").get<std::string>();
      r.head_path = item.at("head_path").get<std::string>();
      r.abdomen_path = item.at("abdomen_path").get<std::string>();
      r.interval_days = item.at("interval_days").get<int>();
      const auto& w = item.at("weight_g");
      if (!w.is_null()) r.weight_g = w.get<double>();
      r.split = parse_split(item.at("split").get<std::string>());
      validate_interval(r.interval_days);
      m.cases.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError("malformed manifest record: " + std::string(e.what()));
    }
  }
  return m;
}

void write_manifest(const std::vector<CaseRecord>& cases, const std::filesystem::path& path) {
  json doc = json::array();
  for (const auto& r : cases) {
    doc.push_back({{"case_id", r.case_id},
                   {"head_path", r.head_path},
                   {"abdomen_path", r.abdomen_path},
                   {"interval_days", r.interval_days},
                   {"weight_g", r.weight_g ? json(*r.weight_g) : json(nullptr)},
                   {"split", to_string(r.split)}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace fbw3d
