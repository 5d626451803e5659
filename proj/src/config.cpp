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

#include "fbw3d/config.hpp"

#include <cstdlib>
#include <fstream>

#include "fbw3d/errors.hpp"

namespace fbw3d {

using nlohmann::json;

std::string to_string(EvalModel m) { return m == EvalModel::kTeacher ? "teacher" : "student"; }

EvalModel parse_eval_model(const std::string& s) {
  if (s == "student") return EvalModel::kStudent;
  if (s == "teacher") return EvalModel::kTeacher;
  throw ConfigError("model must be 'student' or 'teacher', got '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) throw ConfigError("warmup_epochs must be in [0, epochs)");
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (!(alpha >= 0.0) || !(beta_end >= 0.0)) throw ConfigError("alpha and beta_end must be >= 0");
  if (!(m_start >= 0.0 && m_start < 1.0 && m_end >= 0.0 && m_end < 1.0)) {
    throw ConfigError("m_start and m_end must be in [0, 1)");
  }
  for (int64_t d : input_dims) {
    if (d < 32 || d % 32 != 0) throw ConfigError("input_dims entries must be positive multiples of 32");
  }
  if (threads < 0) throw ConfigError("threads must be >= 0");
  augmentation.validate();
  ablation.validate(batch_size);
  network().validate();
}

NetworkConfig TrainConfig::network() const {
  NetworkConfig n;
  n.backbone.width_multiplier = width_multiplier;
  n.backbone.stem_kernel = stem_kernel;
  n.ssm = ssm;
  n.weight_sharing = ablation.weight_sharing;
  n.feature_fusion = ablation.feature_fusion;
  n.channel_attention = ablation.channel_attention;
  n.spatial_attention = ablation.spatial_attention;
  n.use_head = ablation.head_input;
  n.use_abdomen = ablation.abdomen_input;
  return n;
}

double TrainConfig::effective_alpha() const { return ablation.rank_loss ? alpha : 0.0; }

double TrainConfig::effective_beta_end() const { return ablation.sslf ? beta_end : 0.0; }

ScheduleParams TrainConfig::schedule(int64_t steps_per_epoch) const {
  ScheduleParams p;
  p.total_steps = epochs * steps_per_epoch;
  p.warmup_steps = warmup_epochs * steps_per_epoch;
  p.base_lr = base_lr;
  p.beta_end = effective_beta_end();
  p.m_start = m_start;
  p.m_end = m_end;
  return p;
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"base_lr", c.base_lr},
          {"warmup_epochs", c.warmup_epochs},
          {"alpha", c.alpha},
          {"beta_end", c.beta_end},
          {"m_start", c.m_start},
          {"m_end", c.m_end},
          {"seed", c.seed},
          {"augmentation", to_json(c.augmentation)},
          {"width_multiplier", c.width_multiplier},
          {"input_dims", c.input_dims},
          {"stem_kernel", c.stem_kernel},
          {"ssm", {{"state_dim", c.ssm.state_dim}, {"expansion", c.ssm.expansion}, {"conv_width", c.ssm.conv_width}}},
          {"ablation", to_json(c.ablation)},
          {"eval_model", to_string(c.eval_model)},
          {"threads", c.threads}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") c.epochs = value.get<int64_t>();
      else if (key == "batch_size") c.batch_size = value.get<int64_t>();
      else if (key == "base_lr") c.base_lr = value.get<double>();
      else if (key == "warmup_epochs") c.warmup_epochs = value.get<int64_t>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "beta_end") c.beta_end = value.get<double>();
      else if (key == "m_start") c.m_start = value.get<double>();
      else if (key == "m_end") c.m_end = value.get<double>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "augmentation") c.augmentation = augmentation_from_json(value);
      else if (key == "width_multiplier") c.width_multiplier = value.get<double>();
      else if (key == "input_dims") c.input_dims = value.get<Dims>();
      else if (key == "stem_kernel") c.stem_kernel = value.get<std::array<int64_t, 3>>();
      else if (key == "ssm") {
        for (const auto& [sk, sv] : value.items()) {
          if (sk == "state_dim") c.ssm.state_dim = sv.get<int64_t>();
          else if (sk == "expansion") c.ssm.expansion = sv.get<int64_t>();
          else if (sk == "conv_width") c.ssm.conv_width = sv.get<int64_t>();
          else throw ConfigError("unknown config key 'ssm." + sk + "'");
        }
      } else if (key == "ablation") c.ablation = ablation_from_json(value);
      else if (key == "eval_model") c.eval_model = parse_eval_model(value.get<std::string>());
      else if (key == "threads") c.threads = value.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return train_config_from_json(j);
}

uint64_t resolve_seed(std::optional<uint64_t> flag, uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FBW3D_SEED"); env && *env) {
    try {
      size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("FBW3D_SEED is not an unsigned integer: ") + env);
    }
  }
  return config_seed;
}

}  // namespace fbw3d
