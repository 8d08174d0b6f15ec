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

#include "acr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "acr/error.hpp"

namespace acr {

namespace {

void check_lengths(std::span<const double> scores, const std::vector<bool>& correct) {
  if (scores.empty()) throw InvalidInput("metrics: empty input");
  if (scores.size() != correct.size()) throw ShapeMismatch("metrics: scores/correct lengths differ");
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::pair<std::size_t, std::size_t> split_counts(const std::vector<bool>& correct) {
  const auto pos = static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
  const std::size_t neg = correct.size() - pos;
  if (pos == 0 || neg == 0) {
    throw DegenerateSplit("metric needs at least one correct and one incorrect sample");
  }
  return {pos, neg};
}

}  // namespace

RiskCoverageCurve risk_coverage(std::span<const double> scores, const std::vector<bool>& correct) {
  check_lengths(scores, correct);
  const auto order = descending_order(scores);
  const std::size_t n = scores.size();
  RiskCoverageCurve curve;
  curve.coverage.reserve(n);
  curve.risk.reserve(n);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!correct[order[i]]) ++errors;
    const double kept = static_cast<double>(i + 1);
    curve.coverage.push_back(kept / static_cast<double>(n));
    curve.risk.push_back(static_cast<double>(errors) / kept);
  }
  return curve;
}

double aurc(std::span<const double> scores, const std::vector<bool>& correct) {
  const auto curve = risk_coverage(scores, correct);
  double total = 0.0;
  for (double r : curve.risk) total += r;
  return total / static_cast<double>(curve.risk.size());
}

double auroc(std::span<const double> scores, const std::vector<bool>& correct) {
  check_lengths(scores, correct);
  const auto [pos, neg] = split_counts(correct);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the Mann-Whitney U, kept integral so the final division is exact.
  std::uint64_t twice_u = 0;
  std::uint64_t neg_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t pos_tied = 0, neg_tied = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (correct[order[j]] ? pos_tied : neg_tied) += 1;
      ++j;
    }
    twice_u += pos_tied * (2 * neg_below + neg_tied);
    neg_below += neg_tied;
    i = j;
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double fpr_at_95_tpr(std::span<const double> scores, const std::vector<bool>& correct) {
  check_lengths(scores, correct);
  const auto [pos, neg] = split_counts(correct);
  std::vector<double> positives;
  positives.reserve(pos);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (correct[i]) positives.push_back(scores[i]);
  }
  std::sort(positives.begin(), positives.end(), std::greater<>());
  // Smallest k with k / pos >= 0.95, in integer arithmetic.
  const std::size_t k = (95 * pos + 99) / 100;
  const double tau = positives[k - 1];
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!correct[i] && scores[i] >= tau) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(neg);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeMismatch("accuracy: length mismatch");
  if (predictions.empty()) throw InvalidInput("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

bool is_degraded(double fused_conf, std::span<const double> unimodal_confs) {
  return std::any_of(unimodal_confs.begin(), unimodal_confs.end(),
                     [&](double c) { return fused_conf < c; });
}

DegradationReport degradation_rate(std::span<const double> fused_conf,
                                   const std::vector<std::vector<double>>& unimodal_confs,
                                   const std::vector<bool>& correct) {
  if (unimodal_confs.empty()) throw InvalidInput("degradation_rate: no modalities");
  if (correct.size() != fused_conf.size()) throw ShapeMismatch("degradation_rate: length mismatch");
  for (const auto& u : unimodal_confs) {
    if (u.size() != fused_conf.size()) throw ShapeMismatch("degradation_rate: length mismatch");
  }
  std::size_t n_correct = 0, n_incorrect = 0, deg_correct = 0, deg_incorrect = 0;
  std::vector<double> per_sample(unimodal_confs.size());
  for (std::size_t i = 0; i < fused_conf.size(); ++i) {
    for (std::size_t k = 0; k < unimodal_confs.size(); ++k) per_sample[k] = unimodal_confs[k][i];
    const bool degraded = is_degraded(fused_conf[i], per_sample);
    if (correct[i]) {
      ++n_correct;
      deg_correct += degraded ? 1 : 0;
    } else {
      ++n_incorrect;
      deg_incorrect += degraded ? 1 : 0;
    }
  }
  DegradationReport report;
  if (n_correct > 0) report.rate_correct = static_cast<double>(deg_correct) / n_correct;
  if (n_incorrect > 0) report.rate_incorrect = static_cast<double>(deg_incorrect) / n_incorrect;
  return report;
}

ScoreHistogram score_histogram(std::span<const double> scores, const std::vector<bool>& correct,
                               std::size_t bins) {
  if (bins < 1) throw InvalidInput("score_histogram: bins must be >= 1");
  if (scores.size() != correct.size()) throw ShapeMismatch("score_histogram: length mismatch");
  ScoreHistogram h;
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    h.bin_left.push_back(static_cast<double>(b) * width);
    h.bin_right.push_back(b + 1 == bins ? 1.0 : static_cast<double>(b + 1) * width);
  }
  h.count_correct.assign(bins, 0);
  h.count_incorrect.assign(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], 0.0, 1.0);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(s * static_cast<double>(bins)));
    (correct[i] ? h.count_correct : h.count_incorrect)[b] += 1;
  }
  return h;
}

DiscreteJoint::DiscreteJoint(std::size_t n_x1, std::size_t n_x2, std::size_t n_y,
                             std::vector<double> table)
    : n_x1_(n_x1), n_x2_(n_x2), n_y_(n_y), table_(std::move(table)) {
  if (n_x1 == 0 || n_x2 == 0 || n_y == 0) throw InvalidInput("DiscreteJoint: empty alphabet");
  if (table_.size() != n_x1 * n_x2 * n_y) throw InvalidInput("DiscreteJoint: table size");
  double total = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("DiscreteJoint: negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("DiscreteJoint: total mass != 1");
}

std::string DiscreteJoint::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "joint[" << n_x1_ << "x" << n_x2_ << "x" << n_y_ << "] = {";
  for (std::size_t i = 0; i < table_.size(); ++i) os << (i ? ", " : "") << table_[i];
  os << "}";
  return os.str();
}

double conditional_entropy(const DiscreteJoint& joint, Conditioning on) {
  const bool use1 = on == Conditioning::X1 || on == Conditioning::Both;
  const bool use2 = on == Conditioning::X2 || on == Conditioning::Both;
  const std::size_t g1 = use1 ? joint.n_x1() : 1;
  const std::size_t g2 = use2 ? joint.n_x2() : 1;
  // Marginalize onto (x_S, y) then sum -p(x_S, y) log p(y | x_S).
  std::vector<double> pxy(g1 * g2 * joint.n_y(), 0.0);
  for (std::size_t a = 0; a < joint.n_x1(); ++a) {
    for (std::size_t b = 0; b < joint.n_x2(); ++b) {
      const std::size_t group = (use1 ? a : 0) * g2 + (use2 ? b : 0);
      for (std::size_t y = 0; y < joint.n_y(); ++y) {
        pxy[group * joint.n_y() + y] += joint.at(a, b, y);
      }
    }
  }
  double h = 0.0;
  for (std::size_t group = 0; group < g1 * g2; ++group) {
    double px = 0.0;
    for (std::size_t y = 0; y < joint.n_y(); ++y) px += pxy[group * joint.n_y() + y];
    for (std::size_t y = 0; y < joint.n_y(); ++y) {
      const double p = pxy[group * joint.n_y() + y];
      if (p > 0.0) h -= p * std::log(p / px);
    }
  }
  return h;
}

TheoryDiagnostic dpi_and_fano_check(const DiscreteJoint& joint, double tolerance) {
  if (joint.n_y() < 2) throw InvalidInput("dpi_and_fano_check: |Y| must be >= 2");
  TheoryDiagnostic d;
  d.h_y_given_x1 = conditional_entropy(joint, Conditioning::X1);
  d.h_y_given_x2 = conditional_entropy(joint, Conditioning::X2);
  d.h_y_given_x12 = conditional_entropy(joint, Conditioning::Both);
  double hit = 0.0;
  for (std::size_t a = 0; a < joint.n_x1(); ++a) {
    for (std::size_t b = 0; b < joint.n_x2(); ++b) {
      double best = 0.0;
      for (std::size_t y = 0; y < joint.n_y(); ++y) best = std::max(best, joint.at(a, b, y));
      hit += best;
    }
  }
  d.bayes_error = 1.0 - hit;
  const double h_bits = d.h_y_given_x12 / std::log(2.0);
  d.fano_bound = (h_bits - 1.0) / std::log2(static_cast<double>(joint.n_y()));
  d.conditioning_holds = d.h_y_given_x12 <= d.h_y_given_x1 + tolerance &&
                         d.h_y_given_x12 <= d.h_y_given_x2 + tolerance;
  d.fano_holds = d.bayes_error + tolerance >= d.fano_bound;
  if (!d.ok()) {
    std::ostringstream os;
    os.precision(17);
    if (!d.conditioning_holds) {
      os << "conditioning increased entropy: H(Y|X1,X2)=" << d.h_y_given_x12
         << " H(Y|X1)=" << d.h_y_given_x1 << " H(Y|X2)=" << d.h_y_given_x2 << "; ";
    }
    if (!d.fano_holds) {
      os << "Bayes error " << d.bayes_error << " below Fano bound " << d.fano_bound << "; ";
    }
    os << joint.to_string();
    d.violation = os.str();
  }
  return d;
}

}  // namespace acr
