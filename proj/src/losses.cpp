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

#include "fbw3d/losses.hpp"

#include "fbw3d/errors.hpp"

namespace fbw3d {
namespace {

void check_vectors(const torch::Tensor& p, const torch::Tensor& y) {
  if (p.dim() != 1 || y.dim() != 1 || p.size(0) != y.size(0) || p.size(0) == 0) {
    throw ShapeError("loss expects two non-empty vectors of equal length");
  }
}

}  // namespace

torch::Tensor reg_loss(const torch::Tensor& p, const torch::Tensor& y) {
  check_vectors(p, y);
  return (p - y.detach()).pow(2).mean();
}

torch::Tensor rank_loss(const torch::Tensor& p, const torch::Tensor& y) {
  check_vectors(p, y);
  const auto n = static_cast<double>(p.size(0));
  auto labels = y.detach();
  auto active = (labels.unsqueeze(1) > labels.unsqueeze(0)).to(p.scalar_type());
  auto hinge = torch::relu(p.unsqueeze(0) - p.unsqueeze(1));  // max(0, -(p_i - p_j)) at (i, j)
  return (hinge * active).sum() / (n * n);
}

torch::Tensor semi_loss(const torch::Tensor& student, const torch::Tensor& teacher) {
  if (student.dim() != 2 || student.size(0) != student.size(1) || teacher.sizes() != student.sizes()) {
    throw ShapeError("semi loss expects two N x N matrices of the same size");
  }
  const int64_t n = student.size(0);
  if (n < 2) throw DomainError("semi loss needs N >= 2 (no synthetic pairs otherwise)");
  auto off_diag = 1.0 - torch::eye(n, student.options());
  auto sq = (student - teacher.detach()).pow(2) * off_diag;
  return sq.sum() / static_cast<double>(n * (n - 1));
}

double total_loss(double reg, double rank, double semi, const LossWeights& w) {
  return reg + w.alpha * rank + w.beta * semi;
}

torch::Tensor total_loss(const torch::Tensor& reg, const torch::Tensor& rank, const torch::Tensor& semi,
                         const LossWeights& w) {
  return reg + w.alpha * rank + w.beta * semi;
}

}  // namespace fbw3d
