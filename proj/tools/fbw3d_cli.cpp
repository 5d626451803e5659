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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <torch/torch.h>

#include "fbw3d/ablation.hpp"
#include "fbw3d/config.hpp"
#include "fbw3d/errors.hpp"
#include "fbw3d/evaluation.hpp"
#include "fbw3d/phantom.hpp"
#include "fbw3d/trainer.hpp"
#include "fbw3d/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fbw3d;

namespace {

fs::path manifest_path(const fs::path& data) {
  return fs::is_directory(data) ? data / "manifest.json" : data;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

TrainConfig config_from(const std::string& path, std::optional<uint64_t> seed) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : load_train_config(path);
  cfg.seed = resolve_seed(seed, cfg.seed);
  return cfg;
}

struct PhantomArgs {
  int64_t n = 0;
  std::optional<uint64_t> seed;
  std::string out;
  std::string pop_config;
  std::vector<int64_t> split;
  int threads = 0;
};

int cmd_phantom(const PhantomArgs& a) {
  PopulationParams pop;
  if (!a.pop_config.empty()) {
    std::ifstream in(a.pop_config);
    if (!in) throw ConfigError("cannot open population config " + a.pop_config);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("malformed population config: " + std::string(e.what()));
    }
    pop = population_from_json(j);
  }
  std::optional<SplitCounts> counts;
  if (!a.split.empty()) counts = SplitCounts{a.split[0], a.split[1], a.split[2]};
  const auto ds = generate_dataset(a.n, resolve_seed(a.seed, 0), pop, a.out, counts, a.threads);
  std::cout << ds.manifest_path.string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string ablation;
  std::optional<uint64_t> seed;
  bool resume = false;
  std::optional<int64_t> max_epochs;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = config_from(a.config, a.seed);
  if (!a.ablation.empty()) cfg.ablation = apply_ablation_tokens(cfg.ablation, a.ablation);
  cfg.validate();
  FitOptions fo;
  fo.out_dir = a.out;
  fo.resume = a.resume;
  fo.max_epochs = a.max_epochs;
  fo.verbose = !a.quiet;
  const FitResult r = fit(manifest_path(a.data), cfg, fo);
  std::cout << r.best_checkpoint.string() << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string model;
  std::string hadlock_variant;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  EvalOptions eo;
  eo.split = parse_split(a.split);
  if (!a.model.empty()) eo.model = parse_eval_model(a.model);
  if (!a.hadlock_variant.empty()) eo.hadlock_variant = a.hadlock_variant;
  const EvaluationReport rep = evaluate_checkpoint(a.checkpoint, manifest_path(a.data), eo);
  const std::string table = format_table(rep.rows);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.json", to_json(rep).dump(2) + "\n");
    write_text(fs::path(a.out) / "report.txt", table);
  }
  std::cout << table;
  return 0;
}

struct PredictArgs {
  std::string head;
  std::string abdomen;
  int interval_days = 0;
  std::string checkpoint;
  std::string model;
};

int cmd_predict(const PredictArgs& a) {
  validate_interval(a.interval_days);
  if (!fs::exists(a.checkpoint)) throw ConfigError("checkpoint not found: " + a.checkpoint);
  LoadedModel m = load_model(a.checkpoint);
  const EvalModel which = a.model.empty() ? m.config.eval_model : parse_eval_model(a.model);
  const Dims& dims = m.config.input_dims;
  FetalCase c{"input", resize_volume(read_volume(a.head), dims), resize_volume(read_volume(a.abdomen), dims),
              a.interval_days, std::nullopt};
  const double grams = m.trainer->predict_grams({c}, which).front();
  std::printf("%.3f\n", grams);
  return 0;
}

struct AblateArgs {
  std::string rows;
  std::string config;
  std::string data;
  std::string out;
  std::optional<int64_t> epochs;
  std::optional<uint64_t> seed;
  bool quiet = false;
};

int cmd_ablate(const AblateArgs& a) {
  const TrainConfig base = config_from(a.config, a.seed);
  std::vector<AblationRow> rows;
  if (a.rows.empty()) {
    rows = ablation_grid();
  } else {
    std::stringstream ss(a.rows);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) rows.push_back(ablation_row(name));
    }
  }
  AblateOptions ao;
  ao.out_dir = a.out;
  ao.epochs = a.epochs;
  ao.verbose = !a.quiet;
  const auto results = run_ablation(manifest_path(a.data), base, rows, ao);
  const std::string table = format_ablation_table(results);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "ablation.json", to_json(results).dump(2) + "\n");
  write_text(fs::path(a.out) / "ablation.txt", table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbw3d: fetal birth weight estimation from 3D ultrasound volumes"};
  app.require_subcommand(1);

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "Generate a synthetic phantom dataset");
  phantom->add_option("--n", pa.n, "Number of cases")->required();
  phantom->add_option("--seed", pa.seed, "Generation seed");
  phantom->add_option("--out", pa.out, "Output directory")->required();
  phantom->add_option("--pop-config", pa.pop_config, "Population parameter JSON");
  phantom->add_option("--split", pa.split, "Explicit train val test counts")->expected(3);
  phantom->add_option("--threads", pa.threads, "Worker threads (0 = hardware)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", ta.config, "Run config JSON");
  train->add_option("--data", ta.data, "Manifest file or dataset directory")->required();
  train->add_option("--out", ta.out, "Run directory")->required();
  train->add_option("--ablation", ta.ablation, "Comma-separated toggles, e.g. no-sslf,no-rl");
  train->add_option("--seed", ta.seed, "Seed (overrides FBW3D_SEED and config)");
  train->add_flag("--resume", ta.resume, "Continue from <out>/last.pt");
  train->add_option("--max-epochs", ta.max_epochs, "Stop after this many epochs in this call");
  train->add_flag("--quiet", ta.quiet, "No per-epoch progress");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against baselines");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", ea.data, "Manifest file or dataset directory")->required();
  eval->add_option("--split", ea.split, "train, val or test")->capture_default_str();
  eval->add_option("--model", ea.model, "student or teacher");
  eval->add_option("--hadlock-variant", ea.hadlock_variant, "Hadlock coefficient set");
  eval->add_option("--out", ea.out, "Directory for report.json and report.txt");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Predict birth weight for one pair of volumes");
  predict->add_option("--head", pr.head, "Head volume (.fbwv)")->required();
  predict->add_option("--abdomen", pr.abdomen, "Abdomen volume (.fbwv)")->required();
  predict->add_option("--interval-days", pr.interval_days, "Days from scan to delivery (0..3)")->required();
  predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  predict->add_option("--model", pr.model, "student or teacher");

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Run rows of the component ablation grid");
  ablate->add_option("--rows", aa.rows, "Comma-separated row names (default: all)");
  ablate->add_option("--config", aa.config, "Base run config JSON");
  ablate->add_option("--data", aa.data, "Manifest file or dataset directory")->required();
  ablate->add_option("--out", aa.out, "Output directory")->required();
  ablate->add_option("--epochs", aa.epochs, "Override epochs per row");
  ablate->add_option("--seed", aa.seed, "Seed (overrides FBW3D_SEED and config)");
  ablate->add_flag("--quiet", aa.quiet, "No per-epoch progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*phantom) return cmd_phantom(pa);
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ea);
    if (*predict) return cmd_predict(pr);
    if (*ablate) return cmd_ablate(aa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
