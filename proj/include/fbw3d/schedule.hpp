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

namespace fbw3d {

/// Step-indexed training schedules. Steps run 0 .. total_steps - 1; every
/// schedule is a pure function of (step, params) so resuming is exact.
struct ScheduleParams {
  int64_t total_steps = 1;
  int64_t warmup_steps = 0;
  double base_lr = 1e-4;
  double beta_end = 0.2;
  double m_start = 0.99;
  double m_end = 0.9999;
};

struct ScheduleState {
  int64_t step = 0;
  double lr = 0.0;
  double beta = 0.0;
  double m = 0.0;
};

/// Linear warmup 0 -> base_lr over warmup_steps, then cosine decay reaching 0
/// at the final step.
double lr_at(int64_t step, const ScheduleParams& p);

/// Linear 0 -> beta_end between the first and the final step.
double beta_at(int64_t step, const ScheduleParams& p);

/// EMA momentum with log(1 - m) linear from log(1 - m_start) to log(1 - m_end).
double momentum_at(int64_t step, const ScheduleParams& p);

ScheduleState schedule_at(int64_t step, const ScheduleParams& p);

}  // namespace fbw3d
