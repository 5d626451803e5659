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

#include <cmath>

#include <torch/serialize.h>

#include "fbw3d/errors.hpp"
#include "fbw3d/trainer.hpp"

namespace fbw3d {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "fbw3d-checkpoint";
constexpr int kFormatVersion = 1;

}  // namespace

// Archive layout: "meta" (JSON string), "student", optional "teacher",
// "optimizer". Tensors are stored verbatim, so a round trip is bit-exact.
void Trainer::save(const std::filesystem::path& path) const {
  json history = json::array();
  for (const auto& rec : history_) history.push_back(to_json(rec));
  const json meta = {{"format", kFormat},
                     {"version", kFormatVersion},
                     {"config", to_json(cfg_)},
                     {"network", to_json(cfg_.network())},
                     {"normalizer", {{"w_min", normalizer_.w_min}, {"w_max", normalizer_.w_max}}},
                     {"steps_per_epoch", steps_per_epoch_},
                     {"global_step", global_step_},
                     {"epochs_done", epochs_done_},
                     {"best_val_mae_g", std::isfinite(best_val_mae_) ? json(best_val_mae_) : json(nullptr)},
                     {"has_teacher", teacher_ != nullptr},
                     {"history", history}};

  torch::serialize::OutputArchive root;
  root.write("meta", c10::IValue(meta.dump()));
  torch::serialize::OutputArchive student;
  student_->save(student);
  root.write("student", student);
  if (teacher_) {
    torch::serialize::OutputArchive teacher;
    teacher_->model()->save(teacher);
    root.write("teacher", teacher);
  }
  torch::serialize::OutputArchive optim;
  optimizer_->save(optim);
  root.write("optimizer", optim);
  try {
    root.save_to(path.string());
  } catch (const c10::Error& e) {
    throw IoError("cannot write checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
}

std::unique_ptr<Trainer> Trainer::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive root;
  json meta;
  try {
    root.load_from(path.string());
    c10::IValue raw;
    root.read("meta", raw);
    meta = json::parse(raw.toStringRef());
  } catch (const c10::Error& e) {
    throw DataError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  } catch (const json::exception& e) {
    throw DataError("checkpoint metadata is corrupt: " + std::string(e.what()));
  }
  if (meta.value("format", "") != kFormat || meta.value("version", 0) != kFormatVersion) {
    throw DataError("unsupported checkpoint format in " + path.string());
  }

  const TrainConfig cfg = train_config_from_json(meta.at("config"));
  auto trainer = std::make_unique<Trainer>(cfg, meta.at("steps_per_epoch").get<int64_t>());
  trainer->normalizer_ = {meta.at("normalizer").at("w_min").get<double>(),
                          meta.at("normalizer").at("w_max").get<double>()};
  trainer->normalizer_.validate();
  trainer->global_step_ = meta.at("global_step").get<int64_t>();
  trainer->epochs_done_ = meta.at("epochs_done").get<int64_t>();
  const auto& best = meta.at("best_val_mae_g");
  trainer->best_val_mae_ = best.is_null() ? std::numeric_limits<double>::infinity() : best.get<double>();
  for (const auto& rec : meta.at("history")) trainer->history_.push_back(epoch_record_from_json(rec));

  try {
    torch::serialize::InputArchive student;
    root.read("student", student);
    trainer->student_->load(student);
    if (trainer->teacher_) {
      torch::serialize::InputArchive teacher;
      root.read("teacher", teacher);
      trainer->teacher_->model()->load(teacher);
      for (auto& p : trainer->teacher_->model()->parameters()) p.set_requires_grad(false);
    }
    torch::serialize::InputArchive optim;
    root.read("optimizer", optim);
    trainer->optimizer_->load(optim);
  } catch (const c10::Error& e) {
    throw DataError("checkpoint tensors do not match the recorded architecture: " +
                    std::string(e.what_without_backtrace()));
  }
  return trainer;
}

}  // namespace fbw3d
