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

#include "fbw3d/ssm.hpp"

#include <cmath>

#include "fbw3d/errors.hpp"

namespace fbw3d {

void SSMConfig::validate() const {
  if (state_dim < 1 || expansion < 1 || conv_width < 1) {
    throw ConfigError("ssm state_dim, expansion and conv_width must be positive integers");
  }
}

SelectiveSSMImpl::SelectiveSSMImpl(int64_t model_dim, SSMConfig cfg)
    : model_dim_(model_dim),
      inner_dim_(cfg.expansion * model_dim),
      dt_rank_((model_dim + 15) / 16),
      cfg_(cfg) {
  cfg_.validate();
  namespace nn = torch::nn;
  in_proj_ = register_module("in_proj", nn::Linear(nn::LinearOptions(model_dim_, 2 * inner_dim_).bias(false)));
  conv_ = register_module("conv", nn::Conv1d(nn::Conv1dOptions(inner_dim_, inner_dim_, cfg_.conv_width)
                                                 .groups(inner_dim_)
                                                 .padding(cfg_.conv_width - 1)));
  x_proj_ = register_module(
      "x_proj", nn::Linear(nn::LinearOptions(inner_dim_, dt_rank_ + 2 * cfg_.state_dim).bias(false)));
  dt_proj_ = register_module("dt_proj", nn::Linear(dt_rank_, inner_dim_));
  out_proj_ = register_module("out_proj", nn::Linear(nn::LinearOptions(inner_dim_, model_dim_).bias(false)));

  torch::NoGradGuard no_grad;
  // Step sizes start log-uniform in [1e-3, 1e-1]; the bias stores softplus^-1(dt).
  const double std = 1.0 / std::sqrt(static_cast<double>(dt_rank_));
  dt_proj_->weight.uniform_(-std, std);
  auto dt = torch::exp(torch::rand({inner_dim_}) * (std::log(0.1) - std::log(1e-3)) + std::log(1e-3))
                .clamp_min(1e-4);
  dt_proj_->bias.copy_(dt + torch::log(-torch::expm1(-dt)));

  auto a = torch::arange(1, cfg_.state_dim + 1, torch::kFloat32).repeat({inner_dim_, 1});
  a_log_ = register_parameter("A_log", torch::log(a));
  d_skip_ = register_parameter("D", torch::ones({inner_dim_}));
}

torch::Tensor selective_scan(const torch::Tensor& x, const torch::Tensor& dt, const torch::Tensor& a,
                             const torch::Tensor& b, const torch::Tensor& c, const torch::Tensor& d) {
  const int64_t length = x.size(1);
  auto decay = torch::exp(dt.unsqueeze(-1) * a);               // (B, L, E, N)
  auto drive = (dt * x).unsqueeze(-1) * b.unsqueeze(2);        // (B, L, E, N)
  auto h = torch::zeros({x.size(0), x.size(2), a.size(1)}, x.options());
  std::vector<torch::Tensor> ys;
  ys.reserve(static_cast<size_t>(length));
  for (int64_t t = 0; t < length; ++t) {
    h = decay.select(1, t) * h + drive.select(1, t);
    ys.push_back((h * c.select(1, t).unsqueeze(1)).sum(-1));
  }
  return torch::stack(ys, 1) + x * d;
}

torch::Tensor SelectiveSSMImpl::forward(const torch::Tensor& seq) {
  if (seq.dim() != 3 || seq.size(2) != model_dim_) {
    throw ShapeError("selective SSM expects (B, L, " + std::to_string(model_dim_) + ") input");
  }
  const int64_t length = seq.size(1);
  auto xz = in_proj_->forward(seq).chunk(2, -1);
  auto x = xz[0];
  auto z = xz[1];

  x = conv_->forward(x.transpose(1, 2))
          .narrow(2, 0, length)
          .transpose(1, 2);
  x = torch::silu(x);

  auto parts = x_proj_->forward(x).split({dt_rank_, cfg_.state_dim, cfg_.state_dim}, -1);
  auto dt = torch::softplus(dt_proj_->forward(parts[0]));
  auto a = -torch::exp(a_log_);
  auto y = selective_scan(x, dt, a, parts[1], parts[2], d_skip_);
  return out_proj_->forward(y * torch::silu(z));
}

}  // namespace fbw3d
