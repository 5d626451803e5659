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

#include "fbw3d/trainer.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>

#include "fbw3d/augment.hpp"
#include "fbw3d/errors.hpp"
#include "fbw3d/rng.hpp"

namespace fbw3d {

using nlohmann::json;

namespace {

constexpr uint64_t kShuffleSalt = 0x5348554646ULL;
constexpr uint64_t kAugmentSalt = 0x4155474dULL;

// Runs `fn` without disturbing the global torch generator, so building a
// teacher does not shift any later random draw of the student's run.
template <typename Fn>
void with_preserved_torch_rng(Fn&& fn) {
  auto gen = at::detail::getDefaultCPUGenerator();
  at::Tensor state;
  {
    std::lock_guard<std::mutex> lock(gen.mutex());
    state = gen.get_state();
  }
  fn();
  std::lock_guard<std::mutex> lock(gen.mutex());
  gen.set_state(state);
}

}  // namespace

Batch make_batch(const std::vector<FetalCase>& cases, const WeightNormalizer& normalizer, torch::Dtype dtype) {
  if (cases.empty()) throw DataError("cannot build an empty batch");
  std::vector<torch::Tensor> heads, abds;
  std::vector<double> targets;
  bool labeled = true;
  for (const auto& c : cases) {
    heads.push_back(assemble_input(c.head, c.interval_days));
    abds.push_back(assemble_input(c.abdomen, c.interval_days));
    if (c.weight_g) targets.push_back(normalizer.normalize(*c.weight_g));
    else labeled = false;
  }
  Batch b;
  b.head = torch::stack(heads).to(dtype);
  b.abdomen = torch::stack(abds).to(dtype);
  if (labeled) b.target = torch::tensor(targets, torch::kFloat64).to(dtype);
  return b;
}

LossTerms compute_losses(FbwNet& student, FbwNet* teacher, const Batch& batch, const LossWeights& w) {
  const int64_t n = batch.head.size(0);
  if (n < 2) throw DataError("a training batch needs at least two cases");
  if (!batch.target.defined()) throw DataError("training batch contains an unlabeled case");

  LossTerms t;
  auto e_head = student->encode(Site::kHead, batch.head);
  auto e_abd = student->encode(Site::kAbdomen, batch.abdomen);
  t.student_matrix = prediction_matrix(e_head, e_abd, student->head);
  auto p = t.student_matrix.diagonal();
  t.reg = reg_loss(p, batch.target);
  t.rank = rank_loss(p, batch.target);
  t.objective = t.reg;
  if (w.alpha > 0.0) t.objective = t.objective + w.alpha * t.rank;

  if (teacher) {
    torch::NoGradGuard no_grad;
    auto th = (*teacher)->encode(Site::kHead, batch.head);
    auto ta = (*teacher)->encode(Site::kAbdomen, batch.abdomen);
    t.teacher_matrix = prediction_matrix(th, ta, (*teacher)->head);
  }
  if (t.teacher_matrix.defined()) {
    t.semi = semi_loss(t.student_matrix, t.teacher_matrix);
    if (w.beta > 0.0) t.objective = t.objective + w.beta * t.semi;
  } else {
    t.semi = torch::zeros({}, t.reg.options());
  }
  return t;
}

json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"lr", r.lr},
          {"beta", r.beta},
          {"m", r.m},
          {"train_losses", {{"reg", r.train.reg}, {"rank", r.train.rank}, {"semi", r.train.semi}, {"total", r.train.total}}},
          {"val_mae_g", r.val_mae_g},
          {"val_rmse_g", r.val_rmse_g},
          {"val_mape_pct", r.val_mape_pct}};
}

EpochRecord epoch_record_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int64_t>();
  r.lr = j.at("lr").get<double>();
  r.beta = j.at("beta").get<double>();
  r.m = j.at("m").get<double>();
  const auto& l = j.at("train_losses");
  r.train = {l.at("reg").get<double>(), l.at("rank").get<double>(), l.at("semi").get<double>(),
             l.at("total").get<double>()};
  r.val_mae_g = j.at("val_mae_g").get<double>();
  r.val_rmse_g = j.at("val_rmse_g").get<double>();
  r.val_mape_pct = j.at("val_mape_pct").get<double>();
  return r;
}

Trainer::Trainer(const TrainConfig& cfg, int64_t steps_per_epoch)
    : cfg_(cfg), steps_per_epoch_(steps_per_epoch), schedule_(cfg.schedule(steps_per_epoch)) {
  cfg_.validate();
  if (steps_per_epoch_ < 1) throw DataError("training needs at least one batch per epoch");
  if (cfg_.threads > 0) torch::set_num_threads(cfg_.threads);
  torch::manual_seed(cfg_.seed);
  student_ = FbwNet(cfg_.network());
  if (cfg_.ablation.sslf) {
    with_preserved_torch_rng([&] { teacher_ = std::make_unique<MeanTeacher>(cfg_.network(), student_); });
  }
  optimizer_ = std::make_unique<torch::optim::Adam>(student_->parameters(),
                                                    torch::optim::AdamOptions(cfg_.base_lr));
}

FbwNet& Trainer::model(EvalModel which) {
  if (which == EvalModel::kTeacher) {
    if (!teacher_) throw ConfigError("this run has no teacher model (sslf disabled)");
    return teacher_->model();
  }
  return student_;
}

StepReport Trainer::train_step(const Batch& batch) {
  StepReport report;
  report.schedule = current_schedule();
  const LossWeights w{cfg_.effective_alpha(), report.schedule.beta};

  student_->train();
  student_->reset_counter();
  FbwNet* teacher_net = nullptr;
  if (teacher_) {
    teacher_net = &teacher_->model();
    (*teacher_net)->train();
    (*teacher_net)->reset_counter();
  }

  LossTerms terms = compute_losses(student_, teacher_net, batch, w);
  for (auto& group : optimizer_->param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(report.schedule.lr);
  }
  optimizer_->zero_grad();
  terms.objective.backward();
  optimizer_->step();
  if (teacher_) teacher_->update(student_, report.schedule.m);

  report.losses.reg = terms.reg.item<double>();
  report.losses.rank = terms.rank.item<double>();
  report.losses.semi = terms.semi.item<double>();
  report.losses.total = total_loss(report.losses.reg, report.losses.rank, report.losses.semi, w);
  report.student_encoded = student_->encoded_volumes();
  report.teacher_encoded = teacher_net ? (*teacher_net)->encoded_volumes() : 0;
  ++global_step_;
  return report;
}

std::vector<double> Trainer::predict_grams(const std::vector<FetalCase>& cases, EvalModel which,
                                           int64_t batch_size) {
  FbwNet& net = model(which);
  net->eval();
  torch::NoGradGuard no_grad;
  const auto dtype = net->parameters().front().scalar_type();
  std::vector<double> out;
  out.reserve(cases.size());
  for (size_t start = 0; start < cases.size(); start += static_cast<size_t>(batch_size)) {
    const size_t stop = std::min(cases.size(), start + static_cast<size_t>(batch_size));
    std::vector<FetalCase> chunk(cases.begin() + static_cast<std::ptrdiff_t>(start),
                                 cases.begin() + static_cast<std::ptrdiff_t>(stop));
    for (auto& c : chunk) c.weight_g.reset();
    const Batch b = make_batch(chunk, normalizer_, dtype);
    auto p = net->forward(b.head, b.abdomen).to(torch::kFloat64).contiguous();
    for (int64_t i = 0; i < p.size(0); ++i) out.push_back(normalizer_.denormalize(p[i].item<double>()));
  }
  return out;
}

void Trainer::finish_epoch(const EpochRecord& rec) {
  history_.push_back(rec);
  epochs_done_ = rec.epoch;
  best_val_mae_ = std::min(best_val_mae_, rec.val_mae_g);
}

std::vector<FetalCase> load_split(const Manifest& m, Split split, const Dims& input_dims) {
  std::vector<FetalCase> out;
  for (const auto& rec : m.select(split)) {
    FetalCase c = m.load_case(rec);
    c.head = resize_volume(c.head, input_dims);
    c.abdomen = resize_volume(c.abdomen, input_dims);
    out.push_back(std::move(c));
  }
  return out;
}

int64_t steps_per_epoch(int64_t n_train, int64_t batch_size) {
  return n_train / batch_size + (n_train % batch_size >= 2 ? 1 : 0);
}

namespace {

void write_history(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write metric history " + path.string());
  for (const auto& rec : history) out << to_json(rec).dump() << '\n';
}

std::vector<double> weights_of(const std::vector<FetalCase>& cases) {
  std::vector<double> w;
  for (const auto& c : cases) {
    if (!c.weight_g) throw DataError("case " + c.case_id + " has no weight label");
    w.push_back(*c.weight_g);
  }
  return w;
}

}  // namespace

FitResult fit(const std::filesystem::path& manifest_path, const TrainConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  const Manifest manifest = read_manifest(manifest_path);
  const auto train_cases = load_split(manifest, Split::kTrain, cfg.input_dims);
  const auto val_cases = load_split(manifest, Split::kVal, cfg.input_dims);
  if (train_cases.size() < 2) throw DataError("train split needs at least two cases");
  if (val_cases.empty()) throw DataError("val split is empty");
  const auto val_truth = weights_of(val_cases);
  weights_of(train_cases);

  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + opts.out_dir.string());

  FitResult result;
  result.best_checkpoint = opts.out_dir / "best.pt";
  result.last_checkpoint = opts.out_dir / "last.pt";
  result.history_path = opts.out_dir / "history.jsonl";

  const auto n_train = static_cast<int64_t>(train_cases.size());
  const int64_t batch = std::min<int64_t>(cfg.batch_size, n_train);
  const int64_t steps = steps_per_epoch(n_train, batch);

  std::unique_ptr<Trainer> trainer;
  if (opts.resume && std::filesystem::exists(result.last_checkpoint)) {
    trainer = Trainer::load(result.last_checkpoint);
    if (to_json(trainer->config()) != to_json(cfg)) {
      throw ConfigError("resume config differs from the checkpoint's config");
    }
  } else {
    trainer = std::make_unique<Trainer>(cfg, steps);
  }

  const int64_t last_epoch =
      opts.max_epochs ? std::min(cfg.epochs, trainer->epochs_done() + *opts.max_epochs) : cfg.epochs;
  for (int64_t epoch = trainer->epochs_done() + 1; epoch <= last_epoch; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int64_t> order(static_cast<size_t>(n_train));
    for (int64_t i = 0; i < n_train; ++i) order[static_cast<size_t>(i)] = i;
    Rng shuffle(derive_seed({cfg.seed, kShuffleSalt, static_cast<uint64_t>(epoch)}));
    for (int64_t i = n_train - 1; i > 0; --i) {
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(shuffle.below(static_cast<uint64_t>(i + 1)))]);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    for (int64_t s = 0; s < steps; ++s) {
      const int64_t begin = s * batch;
      const int64_t end = std::min(n_train, begin + batch);
      std::vector<FetalCase> cases;
      for (int64_t i = begin; i < end; ++i) {
        const auto idx = order[static_cast<size_t>(i)];
        const auto& c = train_cases[static_cast<size_t>(idx)];
        if (cfg.augmentation.enabled) {
          Rng rng(derive_seed({cfg.seed, kAugmentSalt, static_cast<uint64_t>(epoch), static_cast<uint64_t>(idx)}));
          cases.push_back(augment(c, rng, cfg.augmentation));
        } else {
          cases.push_back(c);
        }
      }
      const StepReport r = trainer->train_step(make_batch(cases, trainer->normalizer()));
      rec.train.reg += r.losses.reg / static_cast<double>(steps);
      rec.train.rank += r.losses.rank / static_cast<double>(steps);
      rec.train.semi += r.losses.semi / static_cast<double>(steps);
      rec.train.total += r.losses.total / static_cast<double>(steps);
      rec.lr = r.schedule.lr;
      rec.beta = r.schedule.beta;
      rec.m = r.schedule.m;
    }

    const auto pred = trainer->predict_grams(val_cases, cfg.eval_model);
    const MetricReport val = compute_metrics(pred, val_truth);
    rec.val_mae_g = val.mae_g.mean;
    rec.val_rmse_g = val.rmse_g;
    rec.val_mape_pct = val.mape_pct.mean;

    const bool improved = rec.val_mae_g < trainer->best_val_mae();
    trainer->finish_epoch(rec);
    if (improved) trainer->save(result.best_checkpoint);
    trainer->save(result.last_checkpoint);
    write_history(result.history_path, trainer->history());

    if (opts.verbose) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "epoch " << epoch << "/" << cfg.epochs << " loss " << rec.train.total << " val MAE "
                << rec.val_mae_g << " g, MAPE " << rec.val_mape_pct << "% (" << secs << " s)\n";
    }
  }
  result.history = trainer->history();
  return result;
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  LoadedModel m;
  m.trainer = Trainer::load(checkpoint);
  m.config = m.trainer->config();
  m.normalizer = m.trainer->normalizer();
  return m;
}

}  // namespace fbw3d
