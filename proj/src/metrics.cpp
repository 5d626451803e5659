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

#include "fbw3d/metrics.hpp"

#include <cmath>
#include <vector>

#include "fbw3d/errors.hpp"

namespace fbw3d {
namespace {

Dispersion summarize(const std::vector<double>& xs) {
  Dispersion d;
  for (double x : xs) d.mean += x;
  d.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - d.mean) * (x - d.mean);
    d.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return d;
}

}  // namespace

MetricReport compute_metrics(std::span<const double> pred_g, std::span<const double> true_g) {
  if (pred_g.size() != true_g.size() || pred_g.empty()) {
    throw ShapeError("metrics need equal, non-zero numbers of predictions and true weights");
  }
  std::vector<double> abs_err, pct_err;
  double sq_sum = 0.0;
  for (size_t i = 0; i < pred_g.size(); ++i) {
    if (!(true_g[i] > 0.0)) throw DomainError("true weights must be positive");
    const double delta = pred_g[i] - true_g[i];
    abs_err.push_back(std::abs(delta));
    pct_err.push_back(100.0 * std::abs(delta) / true_g[i]);
    sq_sum += delta * delta;
  }
  MetricReport r;
  r.n_cases = static_cast<int64_t>(pred_g.size());
  r.mae_g = summarize(abs_err);
  r.rmse_g = std::sqrt(sq_sum / static_cast<double>(pred_g.size()));
  r.rmse_case_std_g = r.mae_g.std;
  r.mape_pct = summarize(pct_err);
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"n_cases", r.n_cases},
          {"mae_g", {{"mean", r.mae_g.mean}, {"std", r.mae_g.std}}},
          {"rmse_g", r.rmse_g},
          {"rmse_case_std_g", r.rmse_case_std_g},
          {"mape_pct", {{"mean", r.mape_pct.mean}, {"std", r.mape_pct.std}}}};
}

}  // namespace fbw3d
