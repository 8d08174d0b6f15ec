/*
 * Copyright 2026 The ACR Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// acr: train / evaluate / sweep / export-hist / make-data front end.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acr/error.hpp"
#include "acr/experiment.hpp"
#include "acr/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scorer;
  std::optional<std::string> method;
  std::optional<std::string> out;
  std::optional<double> shift_sigma;
  std::optional<std::size_t> shift_modality;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config (defaults when omitted)");
  cmd->add_option("--seed", o.seed, "Dataset and training seed");
  cmd->add_option("--scorer", o.scorer, "msp|maxlogit|energy|entropy|doctor_a|doctor_b|gen");
  cmd->add_option("--method", o.method, "baseline|acr|acl_only|mfs_only|ablation:<synthesizer>");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--shift-sigma", o.shift_sigma, "Test-time noise added to one modality");
  cmd->add_option("--shift-modality", o.shift_modality, "Modality receiving --shift-sigma (default 0)");
}

acr::ExperimentConfig resolve(const Overrides& o) {
  nlohmann::json doc = nlohmann::json::object();
  if (!o.config.empty()) doc = acr::config_to_json(acr::load_config(o.config));
  if (o.seed) doc["seed"] = *o.seed;
  if (o.scorer) doc["scorer"] = *o.scorer;
  if (o.method) doc["method"] = *o.method;
  if (o.out) doc["out"] = *o.out;
  if (o.shift_sigma) doc["shift_sigma"] = *o.shift_sigma;
  if (o.shift_modality) doc["shift_modality"] = *o.shift_modality;
  return acr::config_from_json(doc);
}

void print_warnings(const acr::MetricsReport& m) {
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (auto field : acr::split_csv_line(text)) {
    if (field.empty()) continue;
    const auto v = acr::parse_integer(field);
    if (v < 0) throw acr::InvalidConfig("seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) throw acr::InvalidConfig("empty seed list");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive confidence regularization for multimodal failure detection"};
  app.require_subcommand(1);

  Overrides train_opts;
  auto* train_cmd = app.add_subcommand("train", "Generate data, train one arm, evaluate on the test split");
  add_common(train_cmd, train_opts);

  std::string dump_path;
  Overrides eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an external logit dump (no model needed)");
  eval_cmd->add_option("--dump", dump_path, "Logit dump CSV")->required();
  eval_cmd->add_option("--scorer", eval_opts.scorer, "Confidence scorer");
  eval_cmd->add_option("--out", eval_opts.out, "Output directory");
  double temperature = 1.0, gamma = 0.1;
  std::size_t top_m = 0;
  bool renormalize = false;
  eval_cmd->add_option("--temperature", temperature, "Energy temperature");
  eval_cmd->add_option("--gamma", gamma, "GEN gamma");
  eval_cmd->add_option("--top-m", top_m, "GEN top-M (0 = min(C, 100))");
  eval_cmd->add_flag("--renormalize-over-c", renormalize, "Renormalize probabilities over the first C classes");

  Overrides sweep_opts;
  std::string seeds_text, arms_text;
  std::optional<std::size_t> workers;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every (arm, seed) pair and aggregate");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds");
  sweep_cmd->add_option("--arms", arms_text, "Comma-separated methods");
  sweep_cmd->add_option("--workers", workers, "Parallel runs (0 = hardware concurrency)");

  Overrides hist_opts;
  std::string checkpoint_path, data_prefix, split = "test";
  std::size_t bins = 20;
  auto* hist_cmd = app.add_subcommand("export-hist", "Score histogram of a checkpoint by correctness");
  add_common(hist_cmd, hist_opts);
  hist_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint written by train")->required();
  hist_cmd->add_option("--data", data_prefix, "Dataset prefix written by make-data (else regenerated from config)");
  hist_cmd->add_option("--split", split, "train|val|test when regenerating")->check(CLI::IsMember({"train", "val", "test"}));
  hist_cmd->add_option("--bins", bins, "Number of fixed-width bins over [0, 1]");

  Overrides data_opts;
  auto* data_cmd = app.add_subcommand("make-data", "Write the synthetic splits as CSV");
  add_common(data_cmd, data_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      const auto cfg = resolve(train_opts);
      const auto result = acr::run_experiment(cfg);
      acr::write_experiment_outputs(cfg, result, cfg.out);
      print_warnings(result.metrics);
      std::cout << acr::metrics_to_json(result.metrics).dump(2) << '\n';
    } else if (*eval_cmd) {
      acr::ScorerSpec scorer;
      if (eval_opts.scorer) scorer.kind = acr::parse_scorer_kind(*eval_opts.scorer);
      scorer.temperature = temperature;
      scorer.gamma = gamma;
      scorer.top_m = top_m;
      scorer.renormalize_over_c = renormalize;
      const auto dump = acr::read_logit_dump(fs::path(dump_path));
      const auto report = acr::evaluate_dump(dump, scorer);
      const fs::path out = eval_opts.out.value_or("eval_out");
      acr::write_metrics_json(report, out / "metrics.json");
      acr::write_rc_curve_csv(report.curve, out / "rc_curve.csv");
      print_warnings(report);
      std::cout << acr::metrics_to_json(report).dump(2) << '\n';
    } else if (*sweep_cmd) {
      auto cfg = resolve(sweep_opts);
      if (!seeds_text.empty()) cfg.seeds = parse_seed_list(seeds_text);
      if (!arms_text.empty()) {
        cfg.arms.clear();
        for (auto a : acr::split_csv_line(arms_text)) {
          if (!a.empty()) cfg.arms.emplace_back(a);
        }
      }
      if (workers) cfg.workers = *workers;
      acr::validate(cfg);
      const auto sweep = acr::run_sweep(cfg);
      const fs::path out = cfg.out;
      acr::write_sweep_csv(sweep, cfg.arms, out / "sweep.csv");
      std::cout << "wrote " << (out / "sweep.csv").string() << " (" << sweep.rows.size() << " runs)\n";
    } else if (*hist_cmd) {
      if (bins < 1) throw acr::InvalidConfig("--bins must be >= 1");
      const auto cfg = resolve(hist_opts);
      const auto params = acr::read_checkpoint(fs::path(checkpoint_path));
      acr::MultimodalBatch batch;
      if (!data_prefix.empty()) {
        batch = acr::read_dataset_csv(data_prefix, params.shape().modalities);
      } else {
        const auto data = acr::make_dataset(cfg.data);
        batch = split == "train" ? data.train : split == "val" ? data.val : data.test;
      }
      const auto hist = acr::export_histogram(params, batch, cfg.scorer, bins);
      const fs::path out = cfg.out;
      acr::write_histogram_csv(hist, out / "hist_scores.csv");
      std::cout << "wrote " << (out / "hist_scores.csv").string() << '\n';
    } else if (*data_cmd) {
      const auto cfg = resolve(data_opts);
      const auto data = acr::make_dataset(cfg.data);
      const fs::path out = cfg.out;
      acr::write_dataset_csv(data.train, out / "train");
      acr::write_dataset_csv(data.val, out / "val");
      acr::write_dataset_csv(data.test, out / "test");
      std::cout << "wrote " << out.string() << "/{train,val,test}_m*.csv\n";
    }
  } catch (const acr::DivergedTraining& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
