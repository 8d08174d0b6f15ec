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

#include <cmath>
#include <vector>

#include "acr/error.hpp"
#include "acr/metrics.hpp"
#include "acr/numerics.hpp"
#include "doctest.h"
#include "oracles.hpp"

using doctest::Approx;
using V = std::vector<double>;
using B = std::vector<bool>;

TEST_CASE("risk-coverage on the four-sample case") {
  const V s{0.9, 0.8, 0.7, 0.6};
  const B c{true, true, false, true};
  const auto curve = acr::risk_coverage(s, c);
  REQUIRE(curve.risk.size() == 4);
  CHECK(curve.risk[0] == 0.0);
  CHECK(curve.risk[1] == 0.0);
  CHECK(curve.risk[2] == Approx(1.0 / 3.0));
  CHECK(curve.risk[3] == Approx(0.25));
  CHECK(curve.coverage[3] == 1.0);
  CHECK(acr::aurc(s, c) == Approx(7.0 / 48.0).epsilon(1e-15));
  CHECK(1000.0 * acr::aurc(s, c) == Approx(145.83).epsilon(1e-4));
}

TEST_CASE("risk-coverage extremes") {
  const V s{0.3, 0.1, 0.2};
  for (double r : acr::risk_coverage(s, B{true, true, true}).risk) CHECK(r == 0.0);
  for (double r : acr::risk_coverage(s, B{false, false, false}).risk) CHECK(r == 1.0);
  CHECK(acr::aurc(s, B{false, false, false}) * 1000.0 == 1000.0);
  CHECK_THROWS_AS(acr::risk_coverage(V{}, B{}), acr::InvalidInput);
  CHECK_THROWS_AS(acr::risk_coverage(V{1.0}, B{true, false}), acr::ShapeMismatch);
}

TEST_CASE("ties in risk-coverage keep original order") {
  // Equal scores: the incorrect sample at index 0 ranks first.
  const auto curve = acr::risk_coverage(V{0.5, 0.5}, B{false, true});
  CHECK(curve.risk[0] == 1.0);
  CHECK(curve.risk[1] == 0.5);
}

TEST_CASE("auroc examples") {
  CHECK(acr::auroc(V{0.9, 0.8, 0.6, 0.7}, B{true, true, true, false}) == Approx(2.0 / 3.0));
  CHECK(acr::auroc(V{0.9, 0.8, 0.1}, B{true, true, false}) == 1.0);
  CHECK(acr::auroc(V(6, 0.4), B{true, false, true, false, true, true}) == 0.5);
  CHECK_THROWS_AS(acr::auroc(V{0.1, 0.2}, B{true, true}), acr::DegenerateSplit);
  CHECK_THROWS_AS(acr::auroc(V{0.1, 0.2}, B{false, false}), acr::DegenerateSplit);
}

TEST_CASE("fpr95 examples") {
  V s;
  B c;
  for (int i = 1; i <= 20; ++i) {
    s.push_back(i / 20.0);
    c.push_back(true);
  }
  s.push_back(0.12);
  c.push_back(false);
  s.push_back(0.50);
  c.push_back(false);
  CHECK(acr::fpr_at_95_tpr(s, c) == 1.0);

  // Incorrect below the 95% threshold of 20 correct scores.
  V s2;
  B c2;
  for (int i = 1; i <= 20; ++i) {
    s2.push_back(0.5 + i / 100.0);
    c2.push_back(true);
  }
  s2.push_back(0.1);
  c2.push_back(false);
  CHECK(acr::fpr_at_95_tpr(s2, c2) == 0.0);
  CHECK(acr::fpr_at_95_tpr(V{0.1, 0.2, 0.9}, B{true, true, false}) == 1.0);
  CHECK_THROWS_AS(acr::fpr_at_95_tpr(V{0.1}, B{true}), acr::DegenerateSplit);
}

TEST_CASE("accuracy") {
  const std::vector<int> a{1, 2, 3};
  CHECK(acr::accuracy(a, a) == 1.0);
  CHECK(acr::accuracy(a, std::vector<int>{0, 0, 0}) == 0.0);
  CHECK(acr::accuracy(a, std::vector<int>{1, 2, 0}) == Approx(2.0 / 3.0));
  CHECK_THROWS_AS(acr::accuracy(a, std::vector<int>{1}), acr::ShapeMismatch);
}

TEST_CASE("degradation flag and rates") {
  CHECK_FALSE(acr::is_degraded(0.9, V{0.8, 0.7}));
  CHECK(acr::is_degraded(0.6, V{0.7, 0.5}));
  CHECK_FALSE(acr::is_degraded(0.7, V{0.7, 0.7}));
  CHECK(acr::is_degraded(0.6, V{0.5, 0.7}) == acr::is_degraded(0.6, V{0.7, 0.5}));

  const V fused{0.9, 0.6, 0.5, 0.4};
  const std::vector<V> uni{{0.8, 0.7, 0.6, 0.3}, {0.5, 0.5, 0.4, 0.2}};
  const auto r = acr::degradation_rate(fused, uni, B{true, true, false, false});
  CHECK(*r.rate_correct == 0.5);
  CHECK(*r.rate_incorrect == 0.5);
  CHECK(*r.gap() == 0.0);
  const auto only_correct = acr::degradation_rate(fused, uni, B{true, true, true, true});
  CHECK(only_correct.rate_correct.has_value());
  CHECK_FALSE(only_correct.rate_incorrect.has_value());
  CHECK_FALSE(only_correct.gap().has_value());
}

TEST_CASE("metrics agree with the oracles on random instances") {
  acr::RandomStream rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(acr::rng_uniform_int(rng, 2, 120));
    V s(n);
    B c(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid forces plenty of ties.
      s[i] = static_cast<double>(acr::rng_uniform_int(rng, 0, 20)) / 20.0;
      c[i] = acr::rng_uniform01(rng) < 0.7;
    }
    c[0] = true;
    c[1] = false;
    CHECK(acr::auroc(s, c) == oracle::pair_auroc(s, c));
    CHECK(std::abs(acr::aurc(s, c) - oracle::definitional_aurc(s, c)) <= 1e-12);
    CHECK(acr::fpr_at_95_tpr(s, c) == oracle::scan_fpr95(s, c));
    const auto curve = acr::risk_coverage(s, c);
    std::size_t hits = 0;
    for (bool b : c) hits += b ? 1 : 0;
    CHECK(std::abs(curve.risk.back() - (1.0 - static_cast<double>(hits) / n)) <= 1e-12);
  }
}

TEST_CASE("rank metrics are invariant to strictly increasing transforms") {
  acr::RandomStream rng(8);
  V s(60), t(60);
  B c(60);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = acr::rng_normal(rng);
    t[i] = std::exp(3.0 * s[i]) + 1.0;
    c[i] = i % 3 != 0;
  }
  CHECK(acr::auroc(s, c) == acr::auroc(t, c));
  CHECK(acr::aurc(s, c) == acr::aurc(t, c));
  CHECK(acr::fpr_at_95_tpr(s, c) == acr::fpr_at_95_tpr(t, c));
}

TEST_CASE("score histogram conserves counts") {
  const V s{0.05, 0.5, 0.95, 1.0, 0.0, 0.51};
  const B c{true, false, true, true, false, false};
  const auto one = acr::score_histogram(s, c, 1);
  CHECK(one.count_correct[0] == 3);
  CHECK(one.count_incorrect[0] == 3);
  const auto ten = acr::score_histogram(s, c, 10);
  std::size_t total = 0;
  for (std::size_t b = 0; b < 10; ++b) total += ten.count_correct[b] + ten.count_incorrect[b];
  CHECK(total == s.size());
  CHECK(ten.bin_left[0] == 0.0);
  CHECK(ten.bin_right[9] == 1.0);
  CHECK(ten.count_correct[9] == 2);  // 0.95 and the right edge 1.0
  CHECK_THROWS_AS(acr::score_histogram(s, c, 0), acr::InvalidInput);
}

namespace {

// Sums in y-major order, a different traversal from the library.
double brute_conditional_entropy(const acr::DiscreteJoint& j, bool use1, bool use2) {
  double h = 0.0;
  for (std::size_t a = 0; a < (use1 ? j.n_x1() : 1); ++a) {
    for (std::size_t b = 0; b < (use2 ? j.n_x2() : 1); ++b) {
      double px = 0.0;
      std::vector<double> pxy(j.n_y(), 0.0);
      for (std::size_t y = 0; y < j.n_y(); ++y) {
        for (std::size_t x1 = 0; x1 < j.n_x1(); ++x1) {
          if (use1 && x1 != a) continue;
          for (std::size_t x2 = 0; x2 < j.n_x2(); ++x2) {
            if (use2 && x2 != b) continue;
            pxy[y] += j.at(x1, x2, y);
          }
        }
        px += pxy[y];
      }
      for (double p : pxy) {
        if (p > 0.0) h -= p * std::log(p / px);
      }
    }
  }
  return h;
}

}  // namespace

TEST_CASE("conditional entropy examples") {
  // Y independent of X1, uniform binary.
  const acr::DiscreteJoint indep(2, 1, 2, V{0.25, 0.25, 0.25, 0.25});
  CHECK(acr::conditional_entropy(indep, acr::Conditioning::X1) == Approx(std::log(2.0)));
  // Y = X1.
  const acr::DiscreteJoint copy(2, 1, 2, V{0.5, 0.0, 0.0, 0.5});
  CHECK(acr::conditional_entropy(copy, acr::Conditioning::X1) == 0.0);
  CHECK(acr::conditional_entropy(copy, acr::Conditioning::None) == Approx(std::log(2.0)));

  acr::RandomStream rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    V t(8);
    double sum = 0.0;
    for (double& v : t) sum += (v = acr::rng_uniform01(rng));
    for (double& v : t) v /= sum;
    const acr::DiscreteJoint j(2, 2, 2, t);
    CHECK(std::abs(acr::conditional_entropy(j, acr::Conditioning::X1) -
                   brute_conditional_entropy(j, true, false)) <= 1e-12);
    CHECK(std::abs(acr::conditional_entropy(j, acr::Conditioning::X2) -
                   brute_conditional_entropy(j, false, true)) <= 1e-12);
    CHECK(std::abs(acr::conditional_entropy(j, acr::Conditioning::Both) -
                   brute_conditional_entropy(j, true, true)) <= 1e-12);
  }
}

TEST_CASE("theory diagnostics") {
  // Y = X1 xor X2: each modality alone is uninformative, jointly decisive.
  const acr::DiscreteJoint x(2, 2, 2, V{0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0});
  const auto d = acr::dpi_and_fano_check(x);
  CHECK(d.ok());
  CHECK(d.h_y_given_x12 == 0.0);
  CHECK(d.h_y_given_x1 == Approx(std::log(2.0)));
  CHECK(d.bayes_error == 0.0);
  CHECK_THROWS_AS(acr::DiscreteJoint(2, 2, 2, V(8, 0.1)), acr::InvalidInput);
  CHECK_THROWS_AS(acr::DiscreteJoint(1, 1, 2, V{-0.5, 1.5}), acr::InvalidInput);
  CHECK_THROWS_AS(acr::DiscreteJoint(1, 1, 2, V{1.0}), acr::InvalidInput);
}
