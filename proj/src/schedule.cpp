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

#include "fbw3d/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fbw3d {
namespace {

double run_progress(int64_t step, const ScheduleParams& p) {
  const int64_t last = std::max<int64_t>(1, p.total_steps - 1);
  return std::clamp(static_cast<double>(step) / static_cast<double>(last), 0.0, 1.0);
}

}  // namespace

double lr_at(int64_t step, const ScheduleParams& p) {
  step = std::max<int64_t>(0, step);
  if (step < p.warmup_steps) {
    return p.base_lr * static_cast<double>(step) / static_cast<double>(p.warmup_steps);
  }
  const int64_t decay_span = std::max<int64_t>(1, p.total_steps - 1 - p.warmup_steps);
  const double progress =
      std::min(1.0, static_cast<double>(step - p.warmup_steps) / static_cast<double>(decay_span));
  return p.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double beta_at(int64_t step, const ScheduleParams& p) { return p.beta_end * run_progress(step, p); }

double momentum_at(int64_t step, const ScheduleParams& p) {
  const double start = std::log(1.0 - p.m_start);
  const double end = std::log(1.0 - p.m_end);
  const double t = run_progress(step, p);
  if (t == 0.0) return p.m_start;
  if (t == 1.0) return p.m_end;
  return 1.0 - std::exp(start + (end - start) * t);
}

ScheduleState schedule_at(int64_t step, const ScheduleParams& p) {
  return {step, lr_at(step, p), beta_at(step, p), momentum_at(step, p)};
}

}  // namespace fbw3d
