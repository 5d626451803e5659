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

#include "fbw3d/baselines.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fbw3d/errors.hpp"

namespace fbw3d {

using nlohmann::json;

const LogLinearFormula& FormulaCoefficients::hadlock_variant(const std::string& name) const {
  const auto it = hadlock.find(name);
  if (it == hadlock.end()) throw ConfigError("no Hadlock coefficients for variant '" + name + "'");
  return it->second;
}

std::filesystem::path default_formula_path() {
  return std::filesystem::path(FBW3D_DATA_DIR) / "baseline_formulas.json";
}

FormulaCoefficients load_formula_coefficients(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open formula coefficient file " + path.string());
  FormulaCoefficients out;
  try {
    const json doc = json::parse(in);
    out.provenance = doc.at("provenance").get<std::string>();
    const auto& h = doc.at("hadlock");
    out.hadlock_default = h.at("default_variant").get<std::string>();
    for (const auto& [name, v] : h.at("variants").items()) {
      LogLinearFormula f;
      f.reference = v.at("reference").get<std::string>();
      f.log10_intercept = v.at("log10_intercept").get<double>();
      for (const auto& t : v.at("terms")) {
        FormulaTerm term{t.at("coef").get<double>(), t.at("vars").get<std::vector<std::string>>()};
        for (const auto& var : term.vars) {
          if (var != "HC" && var != "AC" && var != "FL" && var != "BPD") {
            throw ConfigError("unknown biometric '" + var + "' in Hadlock variant " + name);
          }
        }
        f.terms.push_back(std::move(term));
      }
      if (f.terms.empty()) throw ConfigError("Hadlock variant " + name + " has no terms");
      out.hadlock.emplace(name, std::move(f));
    }
    out.hadlock_variant(out.hadlock_default);
    const auto& ig = doc.at("intergrowth");
    const auto& c = ig.at("coefficients");
    out.intergrowth = {ig.at("reference").get<std::string>(), c.at("intercept").get<double>(),
                       c.at("ac_cubed").get<double>(), c.at("ac_cubed_log").get<double>(), c.at("hc").get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError("incomplete formula coefficient file " + path.string() + ": " + e.what());
  }
  return out;
}

double hadlock_efw(double hc_mm, double ac_mm, double fl_mm, double bpd_mm, const LogLinearFormula& f) {
  if (!(hc_mm > 0.0 && ac_mm > 0.0 && fl_mm > 0.0 && bpd_mm > 0.0)) {
    throw DomainError("biometrics must be positive");
  }
  if (f.terms.empty()) throw ConfigError("Hadlock coefficients are missing");
  auto value = [&](const std::string& var) {
    if (var == "HC") return hc_mm / 10.0;
    if (var == "AC") return ac_mm / 10.0;
    if (var == "FL") return fl_mm / 10.0;
    return bpd_mm / 10.0;
  };
  double log_efw = f.log10_intercept;
  for (const auto& t : f.terms) {
    double prod = t.coef;
    for (const auto& v : t.vars) prod *= value(v);
    log_efw += prod;
  }
  return std::pow(10.0, log_efw);
}

double intergrowth_efw(double hc_mm, double ac_mm, const IntergrowthCoefficients& c) {
  if (!(hc_mm > 0.0 && ac_mm > 0.0)) throw DomainError("biometrics must be positive");
  if (c.intercept == 0.0 && c.ac_cubed == 0.0 && c.ac_cubed_log == 0.0 && c.hc == 0.0) {
    throw ConfigError("INTERGROWTH-21st coefficients are missing");
  }
  const double u = ac_mm / 10.0 / 100.0;
  const double v = hc_mm / 10.0 / 100.0;
  const double u3 = u * u * u;
  return std::exp(c.intercept + c.ac_cubed * u3 + c.ac_cubed_log * u3 * std::log(u) + c.hc * v);
}

}  // namespace fbw3d
