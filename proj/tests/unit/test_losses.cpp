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

#include "doctest_torch.hpp"

#include <cmath>

#include "fbw3d/errors.hpp"
#include "fbw3d/losses.hpp"

using namespace fbw3d;

namespace {

const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);

torch::Tensor vec(std::initializer_list<double> v) { return torch::tensor(std::vector<double>(v), kF64); }

double val(const torch::Tensor& t) { return t.item<double>(); }

// Double loop over all ordered pairs.
double rank_oracle(const std::vector<double>& p, const std::vector<double>& y) {
  double s = 0.0;
  const size_t n = p.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (y[i] > y[j]) s += std::max(0.0, -(p[i] - p[j]));
    }
  }
  return s / static_cast<double>(n * n);
}

std::vector<double> to_vec(const torch::Tensor& t) {
  const auto c = t.contiguous();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("reg_loss examples") {
    CHECK(val(reg_loss(vec({0.3, 0.6}), vec({0.3, 0.6}))) == 0.0);
    CHECK(std::abs(val(reg_loss(vec({0.5, 0.5}), vec({0.4, 0.6}))) - 0.01) < 1e-12);
    CHECK(std::abs(val(reg_loss(vec({0.3}), vec({0.7}))) - 0.16) < 1e-12);
    CHECK_THROWS_AS(reg_loss(vec({0.3, 0.2}), vec({0.7})), ShapeError);
  }

  TEST_CASE("rank_loss examples") {
    CHECK(std::abs(val(rank_loss(vec({0.2, 0.4}), vec({0.5, 0.3}))) - 0.05) < 1e-12);
    CHECK(val(rank_loss(vec({0.1, 0.9}), vec({0.2, 0.8}))) == 0.0);
    CHECK(val(rank_loss(vec({0.9, 0.1, 0.5}), vec({0.4, 0.4, 0.4}))) == 0.0);
    CHECK_THROWS_AS(rank_loss(vec({0.3, 0.2}), vec({0.7})), ShapeError);
  }

  TEST_CASE("rank_loss matches the pairwise oracle and is zero iff order-consistent") {
    torch::manual_seed(3);
    for (int trial = 0; trial < 200; ++trial) {
      const int64_t n = 2 + trial % 7;
      auto p = torch::rand({n}, kF64);
      // Coarse labels so ties occur.
      auto y = torch::randint(0, 4, {n}, kF64) / 4.0;
      if (trial % 3 == 0) {
        // Force order consistency: sort predictions along the labels.
        const auto order = std::get<1>(y.sort());
        auto sorted_p = std::get<0>(p.sort());
        p = torch::empty_like(p).index_put_({order}, sorted_p);
      }
      const auto pv = to_vec(p), yv = to_vec(y);
      const double r = val(rank_loss(p, y));
      CHECK(std::abs(r - rank_oracle(pv, yv)) < 1e-12);
      bool consistent = true;
      for (size_t i = 0; i < pv.size(); ++i) {
        for (size_t j = 0; j < pv.size(); ++j) {
          if (yv[i] > yv[j] && pv[i] < pv[j]) consistent = false;
        }
      }
      CHECK((r == 0.0) == consistent);
      CHECK(r >= 0.0);
    }
  }

  TEST_CASE("rank_loss is invariant to a shared permutation") {
    torch::manual_seed(4);
    const auto p = torch::rand({9}, kF64), y = torch::rand({9}, kF64);
    const auto perm = torch::randperm(9, torch::kLong);
    CHECK(std::abs(val(rank_loss(p, y)) - val(rank_loss(p.index({perm}), y.index({perm})))) < 1e-15);
  }

  TEST_CASE("rank_loss gradient matches central differences away from kinks") {
    torch::manual_seed(5);
    for (int trial = 0; trial < 20; ++trial) {
      auto p = torch::rand({6}, kF64);
      const auto y = torch::rand({6}, kF64);
      const auto pv = to_vec(p);
      bool near_kink = false;
      for (size_t i = 0; i < pv.size(); ++i) {
        for (size_t j = i + 1; j < pv.size(); ++j) {
          if (std::abs(pv[i] - pv[j]) <= 1e-3) near_kink = true;
        }
      }
      if (near_kink) continue;
      auto pg = p.clone().requires_grad_(true);
      rank_loss(pg, y).backward();
      const auto g = to_vec(pg.grad());
      const double h = 1e-6;
      for (int64_t i = 0; i < 6; ++i) {
        auto plus = p.clone(), minus = p.clone();
        plus[i] += h;
        minus[i] -= h;
        const double fd = (val(rank_loss(plus, y)) - val(rank_loss(minus, y))) / (2 * h);
        const double ga = g[static_cast<size_t>(i)];
        // Absolute floor: rounding noise of the central difference.
        CHECK(std::abs(ga - fd) <= 1e-4 * std::max(std::abs(ga), std::abs(fd)) + 1e-9);
      }
    }
  }

  TEST_CASE("rank_loss sends no gradient through labels") {
    auto y = vec({0.5, 0.3}).requires_grad_(true);
    auto p = vec({0.2, 0.4}).requires_grad_(true);
    rank_loss(p, y).backward();
    CHECK_FALSE(y.grad().defined());
    CHECK(p.grad().defined());
  }

  TEST_CASE("semi_loss examples") {
    const auto t = torch::tensor({0.5, 0.6, 0.4, 0.5}, kF64).view({2, 2});
    CHECK(val(semi_loss(t, t)) == 0.0);
    const auto s = torch::tensor({0.5, 0.7, 0.3, 0.5}, kF64).view({2, 2});
    CHECK(std::abs(val(semi_loss(s, t)) - 0.01) < 1e-12);
    auto sd = s.clone();
    sd[0][0] = 0.9;
    sd[1][1] = 0.1;
    CHECK(val(semi_loss(sd, t)) == val(semi_loss(s, t)));
    CHECK_THROWS_AS(semi_loss(torch::ones({1, 1}, kF64), torch::ones({1, 1}, kF64)), DomainError);
    CHECK_THROWS_AS(semi_loss(torch::ones({2, 3}, kF64), torch::ones({2, 3}, kF64)), ShapeError);
    CHECK_THROWS_AS(semi_loss(torch::ones({3, 3}, kF64), torch::ones({2, 2}, kF64)), ShapeError);
  }

  TEST_CASE("semi_loss treats the teacher as a constant") {
    auto s = torch::rand({3, 3}, kF64).requires_grad_(true);
    auto t = torch::rand({3, 3}, kF64).requires_grad_(true);
    semi_loss(s, t).backward();
    CHECK_FALSE(t.grad().defined());
    const auto g = s.grad();
    CHECK(g.diagonal().abs().max().item<double>() == 0.0);
  }

  TEST_CASE("total_loss composition") {
    CHECK(total_loss(0.3, 0.5, 0.7, LossWeights{0.0, 0.0}) == 0.3);
    CHECK(std::abs(total_loss(0.01, 0.05, 0.01, LossWeights{0.001, 0.2}) - 0.01205) < 1e-12);
    CHECK(total_loss(0.0, 0.0, 0.0, LossWeights{0.001, 0.2}) == 0.0);
    const auto t = total_loss(vec({0.01}).squeeze(), vec({0.05}).squeeze(), vec({0.01}).squeeze(), LossWeights{0.001, 0.2});
    CHECK(std::abs(val(t) - 0.01205) < 1e-12);
  }
}
