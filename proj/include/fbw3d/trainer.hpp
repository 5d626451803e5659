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

#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "fbw3d/config.hpp"
#include "fbw3d/datamodel.hpp"
#include "fbw3d/losses.hpp"
#include "fbw3d/manifest.hpp"
#include "fbw3d/metrics.hpp"
#include "fbw3d/network.hpp"
#include "fbw3d/schedule.hpp"
#include "fbw3d/ssl.hpp"

namespace fbw3d {

/// Network-ready tensors for N cases: (N, 5, D, H, W) per site and the
/// normalized targets (N,).
struct Batch {
  torch::Tensor head;
  torch::Tensor abdomen;
  torch::Tensor target;
};

/// Assembles (optionally labeled) cases into a batch of the given dtype.
Batch make_batch(const std::vector<FetalCase>& cases, const WeightNormalizer& normalizer,
                 torch::Dtype dtype = torch::kFloat32);

struct LossBreakdown {
  double reg = 0.0;
  double rank = 0.0;
  double semi = 0.0;
  double total = 0.0;
};

/// Differentiable loss terms of one batch plus the weighted objective.
struct LossTerms {
  torch::Tensor student_matrix;  ///< N x N
  torch::Tensor teacher_matrix;  ///< N x N, undefined without a teacher
  torch::Tensor reg;
  torch::Tensor rank;
  torch::Tensor semi;
  torch::Tensor objective;
};

/// Student forward (N heads + N abdomens), optional teacher forward without
/// gradients, and reg + alpha * rank + beta * semi. Terms with zero weight are
/// evaluated for reporting but kept out of the objective's graph.
LossTerms compute_losses(FbwNet& student, FbwNet* teacher, const Batch& batch, const LossWeights& w);

struct StepReport {
  LossBreakdown losses;
  ScheduleState schedule;
  int64_t student_encoded = 0;
  int64_t teacher_encoded = 0;
};

struct EpochRecord {
  int64_t epoch = 0;
  double lr = 0.0;
  double beta = 0.0;
  double m = 0.0;
  LossBreakdown train;
  double val_mae_g = 0.0;
  double val_rmse_g = 0.0;
  double val_mape_pct = 0.0;
};

nlohmann::json to_json(const EpochRecord& r);
EpochRecord epoch_record_from_json(const nlohmann::json& j);

/// Everything a checkpoint holds: config, normalizer, student, teacher,
/// optimizer state and schedule position.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, int64_t steps_per_epoch);

  /// One optimizer step on a labeled batch (N >= 2).
  StepReport train_step(const Batch& batch);

  /// Schedule values the next train_step will use.
  ScheduleState current_schedule() const { return schedule_at(global_step_, schedule_); }

  /// Denormalized predictions (grams) in inference mode.
  std::vector<double> predict_grams(const std::vector<FetalCase>& cases, EvalModel which, int64_t batch_size = 8);

  FbwNet& student() { return student_; }
  MeanTeacher* teacher() { return teacher_ ? teacher_.get() : nullptr; }
  FbwNet& model(EvalModel which);
  torch::optim::Adam& optimizer() { return *optimizer_; }

  const TrainConfig& config() const { return cfg_; }
  const WeightNormalizer& normalizer() const { return normalizer_; }
  const ScheduleParams& schedule() const { return schedule_; }
  int64_t steps_per_epoch() const { return steps_per_epoch_; }
  int64_t global_step() const { return global_step_; }
  int64_t epochs_done() const { return epochs_done_; }
  double best_val_mae() const { return best_val_mae_; }
  const std::vector<EpochRecord>& history() const { return history_; }

  void finish_epoch(const EpochRecord& rec);

  void save(const std::filesystem::path& path) const;
  static std::unique_ptr<Trainer> load(const std::filesystem::path& path);

 private:
  TrainConfig cfg_;
  WeightNormalizer normalizer_;
  int64_t steps_per_epoch_;
  ScheduleParams schedule_;
  FbwNet student_{nullptr};
  std::unique_ptr<MeanTeacher> teacher_;
  std::unique_ptr<torch::optim::Adam> optimizer_;
  int64_t global_step_ = 0;
  int64_t epochs_done_ = 0;
  double best_val_mae_ = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history_;
};

/// Loads, resizes and caches every case of one split.
std::vector<FetalCase> load_split(const Manifest& m, Split split, const Dims& input_dims);

/// Batches per epoch: full batches plus a trailing partial batch of >= 2 cases.
int64_t steps_per_epoch(int64_t n_train, int64_t batch_size);

struct FitOptions {
  std::filesystem::path out_dir;
  /// Continue from out_dir/last.pt if present.
  bool resume = false;
  /// Stop after this many epochs in this call (for tests); the schedule still
  /// spans config.epochs.
  std::optional<int64_t> max_epochs;
  bool verbose = false;
};

struct FitResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path history_path;
  std::vector<EpochRecord> history;
};

/// Full training run: shuffled epochs with per-case augmentation streams
/// derived from (seed, epoch, case index), validation every epoch, best-val-MAE
/// checkpoint, JSON-lines metric history.
FitResult fit(const std::filesystem::path& manifest_path, const TrainConfig& cfg, const FitOptions& opts);

/// Model loaded for inference from a checkpoint.
struct LoadedModel {
  TrainConfig config;
  WeightNormalizer normalizer;
  std::unique_ptr<Trainer> trainer;
  FbwNet& net(EvalModel which) { return trainer->model(which); }
};

LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace fbw3d
