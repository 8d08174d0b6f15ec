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

#pragma once

// Experiment orchestration shared by the CLI and the Python module:
// JSON configuration, train/evaluate runs, logit-dump evaluation, seed
// sweeps and the plot-ready output files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acr/io.hpp"
#include "acr/metrics.hpp"
#include "acr/model.hpp"
#include "acr/scores.hpp"
#include "acr/synth.hpp"

namespace acr {

// Training arms: baseline (cross-entropy only), acr (ACL + MFS), acl_only,
// mfs_only, and ablation:<synthesizer> (ACL + an alternative synthesizer).
struct Method {
  bool use_acl = false;
  bool use_outliers = false;
  SynthesizerKind synthesizer = SynthesizerKind::MFS;
};

Method parse_method(const std::string& name);

struct ExperimentConfig {
  SynthConfig data;
  std::size_t embed_dim = 256;
  std::string method = "acr";
  double lambda_acl = 2.0;
  std::size_t n_min = 32;
  std::size_t n_max = 256;
  double w_uni = 1.0;
  std::size_t epochs = 50;
  double lr = 1e-4;
  std::size_t batch = 16;
  double outlier_ratio = 1.0;
  bool detach_outliers = false;
  ScorerSpec scorer;
  double shift_sigma = 0.0;
  std::size_t shift_modality = 0;
  std::size_t hist_bins = 20;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> arms{"baseline", "acr"};
  std::size_t workers = 0;  // sweep parallelism; 0 = hardware concurrency
  std::string out = "out";

  std::uint64_t seed() const noexcept { return data.seed; }
};

// Unknown keys and ill-typed values raise InvalidConfig.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& cfg);

ModelShape model_shape(const ExperimentConfig& cfg);
TrainConfig train_config(const ExperimentConfig& cfg);

struct MetricsReport {
  std::optional<double> aurc_x1000;
  std::optional<double> auroc;
  std::optional<double> fpr95;
  std::optional<double> acc;
  std::optional<double> degradation_rate_correct;
  std::optional<double> degradation_rate_incorrect;
  RiskCoverageCurve curve;
  std::vector<double> scores;
  std::vector<bool> correct;
  std::vector<std::string> warnings;  // e.g. DegenerateSplit for auroc
};

// Predicted label = argmax over the first C fused logits; OOD rows count as
// incorrect; accuracy is over in-distribution rows; degradation compares the
// fused and unimodal MSP when unimodal logits are present.
MetricsReport evaluate_dump(const LogitDump& dump, const ScorerSpec& scorer);

// Object with exactly the keys aurc_x1000, auroc, fpr95, acc,
// degradation_rate_correct, degradation_rate_incorrect (null when undefined).
nlohmann::json metrics_to_json(const MetricsReport& report);

struct ExperimentResult {
  TrainResult training;
  LogitDump test_dump;    // test split, shifted when shift_sigma > 0
  MetricsReport metrics;  // on test_dump
  std::optional<MetricsReport> clean_metrics;  // unshifted test split when shift_sigma > 0
};

// make_dataset -> train -> evaluate on the test split.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// metrics.json, rc_curve.csv, history.csv, hist_scores.csv, model.ckpt, test_logits.csv.
void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                              const std::filesystem::path& dir);

void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path);
void write_rc_curve_csv(const RiskCoverageCurve& curve, const std::filesystem::path& path);
void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
void write_histogram_csv(const ScoreHistogram& hist, const std::filesystem::path& path);

struct SweepRow {
  std::string arm;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by (arm order, seed order)
};

SweepResult run_sweep(const ExperimentConfig& cfg);
// Per-(arm, seed) rows followed by mean and std (population) rows per arm.
void write_sweep_csv(const SweepResult& sweep, const std::vector<std::string>& arms,
                     const std::filesystem::path& path);

// Scores a checkpoint on a batch and bins the scores by correctness.
ScoreHistogram export_histogram(const ModelParams& params, const MultimodalBatch& batch,
                                const ScorerSpec& scorer, std::size_t bins);

}  // namespace acr
