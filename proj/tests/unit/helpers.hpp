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

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "fbw3d/config.hpp"
#include "fbw3d/datamodel.hpp"
#include "fbw3d/network.hpp"

namespace fbw3d::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fbw3d_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Width 0.125, 3x3x3 stem: the smallest network that keeps every component.
inline NetworkConfig tiny_network() {
  NetworkConfig cfg;
  cfg.backbone.width_multiplier = 0.125;
  cfg.backbone.stem_kernel = {3, 3, 3};
  return cfg;
}

/// Runs that finish in seconds on one core.
inline TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.warmup_epochs = 1;
  cfg.base_lr = 1e-3;
  cfg.width_multiplier = 0.125;
  cfg.input_dims = {32, 32, 32};
  cfg.stem_kernel = {3, 3, 3};
  return cfg;
}

inline VolumeGrid random_volume(const Dims& d, const Spacing& s, uint64_t seed) {
  torch::manual_seed(seed);
  return {torch::rand({d[0], d[1], d[2]}), s};
}

/// (N, 5, D, H, W) batch of random inputs.
inline torch::Tensor random_inputs(int64_t n, int64_t side, uint64_t seed, torch::Dtype dtype = torch::kFloat32) {
  torch::manual_seed(seed);
  return torch::rand({n, kInputChannels, side, side, side}, torch::TensorOptions().dtype(dtype));
}

inline bool bit_equal(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes() == b.sizes() && a.dtype() == b.dtype() && torch::equal(a, b);
}

}  // namespace fbw3d::testing
