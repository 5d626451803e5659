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
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "fbw3d/network.hpp"

namespace fbw3d {

/// All ordered (head i, abdomen j) pairs with i != j, row-major; 0-based.
std::vector<std::pair<int64_t, int64_t>> enumerate_pairs(int64_t n);

/// N x N matrix whose (i, j) entry predicts the fetus made of head i and
/// abdomen j. The diagonal holds the real-sample predictions. Costs only the
/// 2N encoder passes that produced the embeddings.
torch::Tensor prediction_matrix(const torch::Tensor& head_embeddings, const torch::Tensor& abd_embeddings,
                                PairHead& head);

/// teacher <- m * teacher + (1 - m) * student, element-wise, in place.
void ema_update(std::vector<torch::Tensor>& teacher, const std::vector<torch::Tensor>& student, double m);

/// Module overload: updates every trainable parameter of `teacher` from the
/// same-named parameter of `student`. Buffers are left alone.
void ema_update(torch::nn::Module& teacher, const torch::nn::Module& student, double m);

/// EMA copy of the student network. Parameters never require gradients.
class MeanTeacher {
 public:
  /// Starts as an exact copy of the student.
  MeanTeacher(const NetworkConfig& cfg, const FbwNet& student);

  void update(const FbwNet& student, double m);

  FbwNet& model() { return model_; }
  const FbwNet& model() const { return model_; }
  double momentum() const { return momentum_; }

 private:
  FbwNet model_;
  double momentum_ = 0.0;
};

}  // namespace fbw3d
