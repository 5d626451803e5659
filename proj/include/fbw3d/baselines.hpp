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
#include <map>
#include <string>
#include <vector>

namespace fbw3d {

/// One product term coef * prod(vars) of a log-linear EFW regression.
/// Variable names are HC, AC, FL and BPD (evaluated in cm).
struct FormulaTerm {
  double coef = 0.0;
  std::vector<std::string> vars;
};

/// log10(EFW) = log10_intercept + sum of terms.
struct LogLinearFormula {
  std::string reference;
  double log10_intercept = 0.0;
  std::vector<FormulaTerm> terms;
};

/// ln(EFW) = intercept + ac_cubed u^3 + ac_cubed_log u^3 ln(u) + hc v,
/// u = AC[cm] / 100, v = HC[cm] / 100.
struct IntergrowthCoefficients {
  std::string reference;
  double intercept = 0.0;
  double ac_cubed = 0.0;
  double ac_cubed_log = 0.0;
  double hc = 0.0;
};

struct FormulaCoefficients {
  std::string provenance;
  std::string hadlock_default;
  std::map<std::string, LogLinearFormula> hadlock;
  IntergrowthCoefficients intergrowth;

  /// Throws ConfigError when the variant is not in the file.
  const LogLinearFormula& hadlock_variant(const std::string& name) const;
};

std::filesystem::path default_formula_path();

/// Parses the coefficient data file; incomplete entries are a ConfigError.
FormulaCoefficients load_formula_coefficients(const std::filesystem::path& path = default_formula_path());

/// Hadlock-family EFW in grams from biometrics in millimetres.
double hadlock_efw(double hc_mm, double ac_mm, double fl_mm, double bpd_mm, const LogLinearFormula& f);

/// INTERGROWTH-21st EFW in grams from HC and AC in millimetres.
double intergrowth_efw(double hc_mm, double ac_mm, const IntergrowthCoefficients& c);

}  // namespace fbw3d
