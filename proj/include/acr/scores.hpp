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

// Confidence scorers. Every scorer follows "higher = more likely correct".

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acr {

enum class ScorerKind { MSP, MaxLogit, Energy, Entropy, DoctorAlpha, DoctorBeta, GEN };

struct ScorerSpec {
  ScorerKind kind = ScorerKind::MSP;
  double temperature = 1.0;  // Energy
  double gamma = 0.1;        // GEN
  std::size_t top_m = 0;     // GEN; 0 selects min(C, 100)
  // Renormalize the softmax over the first C classes instead of truncating
  // the (C+1)-way softmax.
  bool renormalize_over_c = false;
};

// Accepts msp|maxlogit|energy|entropy|doctor_a|doctor_b|gen.
ScorerKind parse_scorer_kind(std::string_view name);
std::string scorer_name(ScorerKind kind);
void validate(const ScorerSpec& spec, std::size_t num_classes);

// The probability-based scorers accept truncated rows (entries in [0, 1]
// that need not sum to one), since the fused head's outlier column is
// dropped at inference without renormalization.
double score_msp(std::span<const double> probs);
double score_maxlogit(std::span<const double> logits);
double score_energy(std::span<const double> logits, double temperature = 1.0);
double score_entropy(std::span<const double> probs);

enum class DoctorVariant { Alpha, Beta };
double score_doctor(std::span<const double> probs, DoctorVariant variant = DoctorVariant::Alpha);
double score_gen(std::span<const double> probs, double gamma = 0.1, std::size_t top_m = 0);

enum class Decision { Correct, Misclassified };
// Accept as correct iff score >= tau.
Decision decide(double score, double tau);

// Probabilities over the first `num_classes` entries of a logit row that may
// carry an extra outlier column.
std::vector<double> class_probs(std::span<const double> logits, std::size_t num_classes,
                                bool renormalize);

// Lowest-index argmax over the first `num_classes` entries.
std::size_t predict_label(std::span<const double> logits, std::size_t num_classes);

// Applies `spec` to one logit row restricted to the first `num_classes`.
double score_logits(std::span<const double> logits, std::size_t num_classes,
                    const ScorerSpec& spec);

}  // namespace acr
