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

#include "fbw3d/evaluation.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "fbw3d/errors.hpp"
#include "fbw3d/phantom.hpp"
#include "fbw3d/trainer.hpp"

namespace fbw3d {

using nlohmann::json;

namespace {

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string pm(const Dispersion& d, int prec) { return fixed(d.mean, prec) + " +/- " + fixed(d.std, prec); }

std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : body) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      if (c) os << "  ";
      const auto pad = std::string(width[c] - cells[c].size(), ' ');
      os << (c == 0 ? cells[c] + pad : pad + cells[c]);
    }
    os << '\n';
  };
  line(header);
  size_t total = 0;
  for (auto w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : body) line(r);
  return os.str();
}

}  // namespace

std::string ablation_name(const AblationConfig& a) {
  for (const auto& row : ablation_grid()) {
    if (row.toggles == a) return row.name;
  }
  return "custom";
}

EvaluationReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                     const std::filesystem::path& manifest_path, const EvalOptions& opts) {
  if (!std::filesystem::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
  LoadedModel loaded = load_model(checkpoint);
  const EvalModel which = opts.model.value_or(loaded.config.eval_model);
  if (which == EvalModel::kTeacher && loaded.trainer->teacher() == nullptr) {
    throw ConfigError("checkpoint has no teacher model (trained without sslf)");
  }

  const Manifest manifest = read_manifest(manifest_path);
  const auto records = manifest.select(opts.split);
  const auto cases = load_split(manifest, opts.split, loaded.config.input_dims);
  if (cases.empty()) throw DataError("split '" + to_string(opts.split) + "' is empty");

  std::vector<double> truth;
  for (const auto& c : cases) {
    if (!c.weight_g) throw DataError("case " + c.case_id + " has no weight label");
    truth.push_back(*c.weight_g);
  }
  const auto pred = loaded.trainer->predict_grams(cases, which);

  EvaluationReport report;
  report.split = to_string(opts.split);
  report.model = to_string(which);
  report.ablation = ablation_name(loaded.config.ablation);
  report.rows.push_back({"Model (" + report.ablation + ", " + report.model + ")", compute_metrics(pred, truth)});
  for (size_t i = 0; i < cases.size(); ++i) {
    report.cases.push_back({cases[i].case_id, truth[i], pred[i], std::nullopt, std::nullopt});
  }

  const auto sidecar = read_phantom_sidecar(manifest_path);
  if (sidecar) {
    const FormulaCoefficients coeffs = load_formula_coefficients(opts.formulas);
    report.hadlock_variant = opts.hadlock_variant.value_or(coeffs.hadlock_default);
    const LogLinearFormula& hadlock = coeffs.hadlock_variant(report.hadlock_variant);
    std::map<std::string, Biometrics> bio;
    for (const auto& [id, entry] : *sidecar) bio.emplace(id, entry.bio);
    std::vector<double> h, ig;
    for (auto& c : report.cases) {
      const auto it = bio.find(c.case_id);
      if (it == bio.end()) throw DataError("no biometrics for case " + c.case_id);
      const Biometrics& b = it->second;
      c.hadlock_g = hadlock_efw(b.hc_mm, b.ac_mm, b.fl_mm, b.bpd_mm, hadlock);
      c.intergrowth_g = intergrowth_efw(b.hc_mm, b.ac_mm, coeffs.intergrowth);
      h.push_back(*c.hadlock_g);
      ig.push_back(*c.intergrowth_g);
    }
    report.rows.push_back({"Hadlock (" + report.hadlock_variant + ")", compute_metrics(h, truth)});
    report.rows.push_back({"INTERGROWTH-21st", compute_metrics(ig, truth)});
  }
  return report;
}

json to_json(const EvaluationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back({{"method", row.method}, {"metrics", to_json(row.metrics)}});
  json cases = json::array();
  for (const auto& c : r.cases) {
    json j = {{"case_id", c.case_id}, {"true_g", c.true_g}, {"model_g", c.model_g}};
    if (c.hadlock_g) j["hadlock_g"] = *c.hadlock_g;
    if (c.intergrowth_g) j["intergrowth_g"] = *c.intergrowth_g;
    cases.push_back(std::move(j));
  }
  json out = {{"split", r.split}, {"model", r.model}, {"ablation", r.ablation}, {"rows", rows}, {"cases", cases}};
  if (!r.hadlock_variant.empty()) out["hadlock_variant"] = r.hadlock_variant;
  return out;
}

std::string format_table(const std::vector<MethodRow>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({r.method, pm(r.metrics.mae_g, 1),
                    fixed(r.metrics.rmse_g, 1) + " +/- " + fixed(r.metrics.rmse_case_std_g, 1),
                    pm(r.metrics.mape_pct, 2)});
  }
  return render({"Method", "MAE (g)", "RMSE (g)", "MAPE (%)"}, body);
}

std::vector<AblationResult> run_ablation(const std::filesystem::path& manifest_path, const TrainConfig& base,
                                         const std::vector<AblationRow>& rows, const AblateOptions& opts) {
  if (rows.empty()) throw ConfigError("no ablation rows selected");
  std::vector<TrainConfig> configs;
  for (const auto& row : rows) {
    TrainConfig cfg = base;
    cfg.ablation = row.toggles;
    if (opts.epochs) cfg.epochs = *opts.epochs;
    cfg.validate();
    configs.push_back(cfg);
  }
  std::vector<AblationResult> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    FitOptions fo;
    fo.out_dir = opts.out_dir / rows[i].name;
    fo.verbose = opts.verbose;
    if (opts.verbose) std::fprintf(stderr, "ablation row %s\n", rows[i].name.c_str());
    const FitResult fr = fit(manifest_path, configs[i], fo);
    EvalOptions eo;
    eo.split = Split::kTest;
    const EvaluationReport rep = evaluate_checkpoint(fr.best_checkpoint, manifest_path, eo);
    out.push_back({rows[i], rep.rows.front().metrics, fr.best_checkpoint});
  }
  return out;
}

json to_json(const std::vector<AblationResult>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    arr.push_back({{"row", r.row.name},
                   {"toggles", to_json(r.row.toggles)},
                   {"test", to_json(r.test)},
                   {"checkpoint", r.checkpoint.string()}});
  }
  return arr;
}

std::string format_ablation_table(const std::vector<AblationResult>& results) {
  auto mark = [](bool b) { return std::string(b ? "x" : ""); };
  std::vector<std::vector<std::string>> body;
  for (const auto& r : results) {
    const auto& t = r.row.toggles;
    body.push_back({r.row.name, mark(true), mark(t.weight_sharing), mark(t.feature_fusion), mark(t.channel_attention),
                    mark(t.spatial_attention), mark(t.rank_loss), mark(t.sslf), mark(t.head_input),
                    mark(t.abdomen_input), pm(r.test.mae_g, 1), pm(r.test.mape_pct, 2)});
  }
  return render({"Row", "3DR18", "WS", "FF", "CA", "SA", "RL", "SSLF", "Head", "Abdomen", "MAE (g)", "MAPE (%)"},
                body);
}

}  // namespace fbw3d
