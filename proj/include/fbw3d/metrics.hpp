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

#include <cstdint>
#include <span>

#include <json.hpp>

namespace fbw3d {

/// Mean and per-case sample standard deviation (n - 1; 0 for a single case).
struct Dispersion {
  double mean = 0.0;
  double std = 0.0;
};

/// Gram-space error summary. RMSE is a single scalar; its "±" companion is the
/// sample std of the per-case error magnitudes sqrt(delta^2) = |delta|.
struct MetricReport {
  Dispersion mae_g;
  double rmse_g = 0.0;
  double rmse_case_std_g = 0.0;
  Dispersion mape_pct;
  int64_t n_cases = 0;
};

/// Throws ShapeError on length mismatch / empty input and DomainError when a
/// true weight is not positive.
MetricReport compute_metrics(std::span<const double> pred_g, std::span<const double> true_g);

nlohmann::json to_json(const MetricReport& r);

}  // namespace fbw3d
