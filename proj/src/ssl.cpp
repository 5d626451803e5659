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

#include "fbw3d/ssl.hpp"

#include "fbw3d/errors.hpp"

namespace fbw3d {

std::vector<std::pair<int64_t, int64_t>> enumerate_pairs(int64_t n) {
  if (n < 2) throw DomainError("synthetic pairs need N >= 2");
  std::vector<std::pair<int64_t, int64_t>> pairs;
  pairs.reserve(static_cast<size_t>(n * (n - 1)));
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

torch::Tensor prediction_matrix(const torch::Tensor& head_embeddings, const torch::Tensor& abd_embeddings,
                                PairHead& head) {
  return head->pair_matrix(head_embeddings, abd_embeddings);
}

void ema_update(std::vector<torch::Tensor>& teacher, const std::vector<torch::Tensor>& student, double m) {
  if (!(m >= 0.0 && m < 1.0)) throw DomainError("EMA momentum must be in [0, 1)");
  if (teacher.size() != student.size()) throw ShapeError("EMA parameter lists differ in length");
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < teacher.size(); ++i) {
    if (teacher[i].sizes() != student[i].sizes()) throw ShapeError("EMA parameter shape mismatch");
    teacher[i].mul_(m).add_(student[i], 1.0 - m);
  }
}

void ema_update(torch::nn::Module& teacher, const torch::nn::Module& student, double m) {
  auto src = student.named_parameters();
  std::vector<torch::Tensor> t, s;
  for (auto& p : teacher.named_parameters()) {
    const auto* match = src.find(p.key());
    if (!match) throw ShapeError("student has no parameter named '" + p.key() + "'");
    t.push_back(p.value());
    s.push_back(*match);
  }
  if (t.size() != src.size()) throw ShapeError("teacher and student parameter sets differ");
  ema_update(t, s, m);
}

MeanTeacher::MeanTeacher(const NetworkConfig& cfg, const FbwNet& student) : model_(cfg) {
  cast_floating(*model_, student->parameters().front().scalar_type());
  copy_state(*model_, *student);
  for (auto& p : model_->parameters()) p.set_requires_grad(false);
}

void MeanTeacher::update(const FbwNet& student, double m) {
  ema_update(*model_, *student, m);
  momentum_ = m;
}

}  // namespace fbw3d
