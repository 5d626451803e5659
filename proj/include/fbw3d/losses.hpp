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

#include <torch/torch.h>

namespace fbw3d {

struct LossWeights {
  double alpha = 0.001;
  double beta = 0.0;
};

/// mean_i (p_i - y_i)^2.
torch::Tensor reg_loss(const torch::Tensor& p, const torch::Tensor& y);

/// (1/N^2) sum_ij max(0, -(p_i - p_j)) [y_i > y_j]. Labels act as a hard mask
/// (no gradient); the hinge subgradient at p_i == p_j is zero.
torch::Tensor rank_loss(const torch::Tensor& p, const torch::Tensor& y);

/// Mean squared difference over the N(N-1) off-diagonal entries of two N x N
/// prediction matrices. The teacher matrix is treated as a constant target.
torch::Tensor semi_loss(const torch::Tensor& student, const torch::Tensor& teacher);

double total_loss(double reg, double rank, double semi, const LossWeights& w);
torch::Tensor total_loss(const torch::Tensor& reg, const torch::Tensor& rank, const torch::Tensor& semi,
                         const LossWeights& w);

}  // namespace fbw3d
