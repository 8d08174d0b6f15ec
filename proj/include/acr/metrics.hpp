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

// Selective-classification metrics, confidence-degradation statistics and
// table-level information-theoretic diagnostics.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace acr {

struct RiskCoverageCurve {
  std::vector<double> coverage;  // i / N for i = 1..N
  std::vector<double> risk;      // error rate among the i highest-scored samples
};

// Samples are ranked by descending score; ties keep ascending original index.
RiskCoverageCurve risk_coverage(std::span<const double> scores, const std::vector<bool>& correct);

// Mean selective risk over the N coverage levels (multiply by 1000 to report).
double aurc(std::span<const double> scores, const std::vector<bool>& correct);

// Probability that a random correct sample outscores a random incorrect one,
// ties counted one half. Throws DegenerateSplit without both classes.
double auroc(std::span<const double> scores, const std::vector<bool>& correct);

// Fraction of incorrect samples accepted at the largest threshold that keeps
// at least 95% of the correct samples. Throws DegenerateSplit like auroc.
double fpr_at_95_tpr(std::span<const double> scores, const std::vector<bool>& correct);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// True when the fused confidence is strictly below at least one unimodal one.
bool is_degraded(double fused_conf, std::span<const double> unimodal_confs);

struct DegradationReport {
  std::optional<double> rate_correct;    // absent when there are no correct samples
  std::optional<double> rate_incorrect;  // absent when there are no incorrect samples
  std::optional<double> gap() const {
    if (!rate_correct || !rate_incorrect) return std::nullopt;
    return *rate_incorrect - *rate_correct;
  }
};

// unimodal_confs[k][i] is modality k's confidence for sample i.
DegradationReport degradation_rate(std::span<const double> fused_conf,
                                   const std::vector<std::vector<double>>& unimodal_confs,
                                   const std::vector<bool>& correct);

// Probability table over (X1, X2, Y), indexed [x1][x2][y] in row-major order.
class DiscreteJoint {
 public:
  DiscreteJoint(std::size_t n_x1, std::size_t n_x2, std::size_t n_y, std::vector<double> table);

  std::size_t n_x1() const noexcept { return n_x1_; }
  std::size_t n_x2() const noexcept { return n_x2_; }
  std::size_t n_y() const noexcept { return n_y_; }
  double at(std::size_t x1, std::size_t x2, std::size_t y) const {
    return table_[(x1 * n_x2_ + x2) * n_y_ + y];
  }
  const std::vector<double>& table() const noexcept { return table_; }
  std::string to_string() const;

 private:
  std::size_t n_x1_, n_x2_, n_y_;
  std::vector<double> table_;
};

// Fixed-width bins over [0, 1]; scores outside the range land in the edge bins.
struct ScoreHistogram {
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<std::size_t> count_correct;
  std::vector<std::size_t> count_incorrect;
};

ScoreHistogram score_histogram(std::span<const double> scores, const std::vector<bool>& correct,
                               std::size_t bins);

enum class Conditioning { None, X1, X2, Both };

// H(Y | X_S) in nats.
double conditional_entropy(const DiscreteJoint& joint, Conditioning on);

struct TheoryDiagnostic {
  double h_y_given_x1 = 0.0;   // nats
  double h_y_given_x2 = 0.0;   // nats
  double h_y_given_x12 = 0.0;  // nats
  double bayes_error = 0.0;    // error of the MAP predictor from (X1, X2)
  double fano_bound = 0.0;     // (H_bits(Y|X1,X2) - 1) / log2|Y|
  bool conditioning_holds = true;
  bool fano_holds = true;
  std::string violation;  // offending table when either check fails
  bool ok() const noexcept { return conditioning_holds && fano_holds; }
};

TheoryDiagnostic dpi_and_fano_check(const DiscreteJoint& joint, double tolerance = 1e-12);

}  // namespace acr
