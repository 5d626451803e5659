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

#include <torch/torch.h>

namespace fbw3d {

/// Selective state-space block hyperparameters (Mamba defaults).
struct SSMConfig {
  int64_t state_dim = 16;
  int64_t expansion = 2;
  int64_t conv_width = 4;

  void validate() const;
};

/// Causal selective state-space block over a token sequence.
///
/// Pipeline: input projection into a main and a gate stream; depthwise causal
/// convolution + SiLU on the main stream; input-dependent step size, B and C;
/// zero-order-hold discretized diagonal recurrence
///   h_t = exp(dt_t A) h_{t-1} + dt_t B_t x_t,   y_t = C_t h_t + D x_t;
/// multiplicative SiLU gate; output projection. Token t of the output only
/// depends on input tokens <= t.
class SelectiveSSMImpl : public torch::nn::Module {
 public:
  SelectiveSSMImpl(int64_t model_dim, SSMConfig cfg);

  /// seq: (B, L, model_dim) -> (B, L, model_dim).
  torch::Tensor forward(const torch::Tensor& seq);

  int64_t model_dim() const { return model_dim_; }

 private:
  int64_t model_dim_;
  int64_t inner_dim_;
  int64_t dt_rank_;
  SSMConfig cfg_;

  torch::nn::Linear in_proj_{nullptr};
  torch::nn::Conv1d conv_{nullptr};
  torch::nn::Linear x_proj_{nullptr};
  torch::nn::Linear dt_proj_{nullptr};
  torch::nn::Linear out_proj_{nullptr};
  torch::Tensor a_log_;
  torch::Tensor d_skip_;
};
TORCH_MODULE(SelectiveSSM);

/// Sequential scan of the diagonal recurrence; x, dt: (B, L, E), a: (E, N),
/// b, c: (B, L, N), d: (E). Returns (B, L, E).
torch::Tensor selective_scan(const torch::Tensor& x, const torch::Tensor& dt, const torch::Tensor& a,
                             const torch::Tensor& b, const torch::Tensor& c, const torch::Tensor& d);

}  // namespace fbw3d
