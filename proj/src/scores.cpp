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

#include "acr/scores.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "acr/error.hpp"
#include "acr/numerics.hpp"

namespace acr {

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "msp") return ScorerKind::MSP;
  if (name == "maxlogit") return ScorerKind::MaxLogit;
  if (name == "energy") return ScorerKind::Energy;
  if (name == "entropy") return ScorerKind::Entropy;
  if (name == "doctor" || name == "doctor_a") return ScorerKind::DoctorAlpha;
  if (name == "doctor_b") return ScorerKind::DoctorBeta;
  if (name == "gen") return ScorerKind::GEN;
  throw InvalidConfig("unknown scorer '" + std::string(name) + "'");
}

std::string scorer_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::MSP: return "msp";
    case ScorerKind::MaxLogit: return "maxlogit";
    case ScorerKind::Energy: return "energy";
    case ScorerKind::Entropy: return "entropy";
    case ScorerKind::DoctorAlpha: return "doctor_a";
    case ScorerKind::DoctorBeta: return "doctor_b";
    case ScorerKind::GEN: return "gen";
  }
  return "unknown";
}

void validate(const ScorerSpec& spec, std::size_t num_classes) {
  if (!(spec.temperature > 0.0)) throw InvalidConfig("scorer temperature must be > 0");
  if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw InvalidConfig("GEN gamma must lie in (0, 1)");
  if (spec.top_m > num_classes) throw InvalidConfig("GEN top_m exceeds class count");
}

namespace {

void check_probs(std::span<const double> probs, const char* who) {
  if (probs.empty()) throw InvalidInput(std::string(who) + ": empty probability vector");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string(who) + ": entry outside [0, 1]");
  }
}

}  // namespace

double score_msp(std::span<const double> probs) {
  check_probs(probs, "score_msp");
  return *std::max_element(probs.begin(), probs.end());
}

double score_maxlogit(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInput("score_maxlogit: empty logits");
  return *std::max_element(logits.begin(), logits.end());
}

double score_energy(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("score_energy: temperature must be > 0");
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& z : scaled) z /= temperature;
  return temperature * logsumexp(scaled);
}

double score_entropy(std::span<const double> probs) {
  check_probs(probs, "score_entropy");
  double s = 0.0;
  for (double p : probs) {
    if (p > 0.0) s += p * std::log(p);
  }
  return s;
}

double score_doctor(std::span<const double> probs, DoctorVariant variant) {
  check_probs(probs, "score_doctor");
  if (variant == DoctorVariant::Alpha) {
    double g = 0.0;
    for (double p : probs) g += p * p;
    if (g == 0.0) throw InvalidInput("score_doctor: all-zero probability vector");
    return -(1.0 - g) / g;
  }
  const double pe = 1.0 - *std::max_element(probs.begin(), probs.end());
  if (pe <= 0.0) return 0.0;
  return -pe / (1.0 - pe);
}

double score_gen(std::span<const double> probs, double gamma, std::size_t top_m) {
  check_probs(probs, "score_gen");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("score_gen: gamma must lie in (0, 1)");
  if (top_m == 0) top_m = std::min<std::size_t>(probs.size(), 100);
  if (top_m > probs.size()) throw InvalidInput("score_gen: top_m exceeds class count");
  std::vector<double> sorted(probs.begin(), probs.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top_m),
                    sorted.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t j = 0; j < top_m; ++j) {
    s += std::pow(sorted[j], gamma) * std::pow(1.0 - sorted[j], gamma);
  }
  return -s;
}

Decision decide(double score, double tau) {
  return score >= tau ? Decision::Correct : Decision::Misclassified;
}

std::vector<double> class_probs(std::span<const double> logits, std::size_t num_classes,
                                bool renormalize) {
  if (num_classes == 0 || num_classes > logits.size()) {
    throw ShapeMismatch("class_probs: class count exceeds logit width");
  }
  if (renormalize) return softmax(logits.first(num_classes));
  auto p = softmax(logits);
  p.resize(num_classes);
  return p;
}

std::size_t predict_label(std::span<const double> logits, std::size_t num_classes) {
  if (num_classes == 0 || num_classes > logits.size()) {
    throw ShapeMismatch("predict_label: class count exceeds logit width");
  }
  auto head = logits.first(num_classes);
  return static_cast<std::size_t>(std::max_element(head.begin(), head.end()) - head.begin());
}

double score_logits(std::span<const double> logits, std::size_t num_classes,
                    const ScorerSpec& spec) {
  switch (spec.kind) {
    case ScorerKind::MaxLogit: return score_maxlogit(logits.first(num_classes));
    case ScorerKind::Energy: return score_energy(logits.first(num_classes), spec.temperature);
    default: break;
  }
  const auto probs = class_probs(logits, num_classes, spec.renormalize_over_c);
  switch (spec.kind) {
    case ScorerKind::MSP: return score_msp(probs);
    case ScorerKind::Entropy: return score_entropy(probs);
    case ScorerKind::DoctorAlpha: return score_doctor(probs, DoctorVariant::Alpha);
    case ScorerKind::DoctorBeta: return score_doctor(probs, DoctorVariant::Beta);
    case ScorerKind::GEN: return score_gen(probs, spec.gamma, spec.top_m);
    default: break;
  }
  throw InvalidInput("score_logits: unhandled scorer");
}

}  // namespace acr
