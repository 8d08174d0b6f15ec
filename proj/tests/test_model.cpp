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

#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

#include "acr/error.hpp"
#include "acr/model.hpp"
#include "acr/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using acr::Matrix;
using doctest::Approx;

namespace {

std::vector<Matrix> random_inputs(std::size_t M, std::size_t n, std::size_t d, acr::RandomStream& rng) {
  std::vector<Matrix> x;
  for (std::size_t k = 0; k < M; ++k) {
    Matrix m(n, d);
    for (double& v : m.values()) v = acr::rng_normal(rng);
    x.push_back(std::move(m));
  }
  return x;
}

acr::ModelParams scaled_init(const acr::ModelShape& shape, acr::RandomStream& rng, double scale) {
  auto p = acr::ModelParams::init(shape, rng);
  for (auto& t : p.tensors()) {
    for (double& v : t.values()) v *= scale;
  }
  return p;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("zero weights give uniform fused probabilities") {
  const acr::ModelShape shape{2, 3, 4, 5};
  const auto params = acr::ModelParams::zeros(shape);
  acr::RandomStream rng(0);
  const auto x = random_inputs(2, 7, 3, rng);
  const auto r = acr::forward(x, params);
  REQUIRE(r.size() == 7);
  CHECK(r.fused_probs.rows() == 7);
  CHECK(r.fused_probs.cols() == 6);
  CHECK(r.uni_logits[1].rows() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(r.conf[i] == Approx(1.0 / 6.0));
    CHECK(r.conf_class[i] == 0);
    CHECK(r.uni_conf[0][i] == Approx(0.2));
  }
}

TEST_CASE("forward matches a hand-evaluated example") {
  const acr::ModelShape shape{2, 1, 1, 2};
  auto p = acr::ModelParams::zeros(shape);
  p.encoder_weight(0) = Matrix{{2.0}};
  p.encoder_weight(1) = Matrix{{-1.0}};
  p.encoder_bias(1) = Matrix{{0.5}};
  p.head_weight(0) = Matrix{{1.0, -1.0}};
  p.head_weight(1) = Matrix{{3.0, 3.0}};
  p.head_bias(1) = Matrix{{0.1, 0.0}};
  p.fusion_weight() = Matrix{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  const std::vector<Matrix> x{Matrix{{1.0}}, Matrix{{1.0}}};
  const auto r = acr::forward(x, p);
  // E1 = relu(2) = 2, E2 = relu(-0.5) = 0.
  CHECK(r.embeddings[0](0, 0) == 2.0);
  CHECK(r.embeddings[1](0, 0) == 0.0);
  CHECK(r.fused_logits == Matrix{{2.0, 0.0, 0.0}});
  const double e2 = std::exp(2.0);
  CHECK(r.conf[0] == Approx(e2 / (e2 + 2.0)));
  CHECK(r.uni_conf[0][0] == Approx(e2 / (e2 + std::exp(-2.0))));
  CHECK(r.uni_conf[1][0] == Approx(std::exp(0.1) / (std::exp(0.1) + 1.0)));
  CHECK(r.uni_conf_class[1][0] == 0);
  CHECK_THROWS_AS(acr::forward(std::vector<Matrix>{Matrix{{1.0, 2.0}}, Matrix{{1.0}}}, p), acr::ShapeMismatch);
  CHECK_THROWS_AS(acr::forward(std::vector<Matrix>{Matrix{{1.0}}}, p), acr::ShapeMismatch);
}

TEST_CASE("acl loss examples") {
  CHECK(acr::acl_loss(0.8, std::vector<double>{0.9, 0.7}) == Approx(0.05));
  CHECK(acr::acl_loss(0.95, std::vector<double>{0.9, 0.7}) == 0.0);
  CHECK(acr::acl_loss(0.5, std::vector<double>{0.6, 0.7, 0.4}) == Approx(0.1));
  CHECK(acr::acl_loss(0.5, std::vector<double>{0.4, 0.7, 0.6}) ==
        acr::acl_loss(0.5, std::vector<double>{0.6, 0.7, 0.4}));
}

TEST_CASE("acl gradient vanishes without active hinges") {
  const acr::ModelShape shape{2, 3, 4, 3};
  auto p = acr::ModelParams::zeros(shape);
  // A strong fusion bias keeps the fused confidence above both unimodal ones.
  p.fusion_bias() = Matrix{{8.0, 0.0, 0.0, 0.0}};
  acr::RandomStream rng(1);
  const auto r = acr::forward(random_inputs(2, 4, 3, rng), p);
  const auto g = acr::acl_grad(r);
  for (double v : g.fused.values()) CHECK(v == 0.0);
  for (const auto& u : g.uni) {
    for (double v : u.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("acl gradient treats the hinge at equality as inactive") {
  const acr::ModelShape shape{2, 3, 4, 3};
  const auto p = acr::ModelParams::zeros(shape);
  acr::RandomStream rng(2);
  auto r = acr::forward(random_inputs(2, 1, 3, rng), p);
  r.uni_conf[0][0] = r.conf[0];
  r.uni_conf[1][0] = r.conf[0];
  const auto g = acr::acl_grad(r);
  for (double v : g.fused.values()) CHECK(v == 0.0);
}

TEST_CASE("acl gradient agrees with finite differences on logits") {
  acr::RandomStream rng(3);
  int checked = 0, with_active = 0;
  for (int trial = 0; trial < 60 && checked < 30; ++trial) {
    const std::size_t M = trial % 2 == 0 ? 2 : 3;
    const acr::ModelShape shape{M, 3, 4, 3};
    const auto p = scaled_init(shape, rng, 3.0);
    const auto r = acr::forward(random_inputs(M, 3, 3, rng), p);
    if (!oracle::has_margins(r, 3, 1e-3)) continue;
    const auto g = acr::acl_grad(r);
    std::vector<Matrix> vars{r.fused_logits};
    vars.insert(vars.end(), r.uni_logits.begin(), r.uni_logits.end());
    std::vector<Matrix> analytic{g.fused};
    analytic.insert(analytic.end(), g.uni.begin(), g.uni.end());
    const auto f = [&] {
      const std::vector<Matrix> uni(vars.begin() + 1, vars.end());
      return oracle::acl_from_logits(vars[0], uni, 3);
    };
    if (f() > 0.0) ++with_active;
    const auto res = oracle::check_gradient(vars, analytic, f);
    CHECK(res.max_rel_error <= 1e-5);
    ++checked;
  }
  CHECK(checked >= 20);
  CHECK(with_active >= 5);
}

TEST_CASE("total loss value matches the reference objective") {
  acr::RandomStream rng(4);
  for (std::size_t M : {2, 3}) {
    const acr::ModelShape shape{M, 3, 4, 3};
    const auto p = scaled_init(shape, rng, 2.0);
    const auto x = random_inputs(M, 5, 3, rng);
    const std::vector<int> y{0, 1, 2, 1, 0};
    const acr::SwapConfig swap{1, 4, 3};
    const auto outliers = acr::make_outlier_batch(y, 3, acr::SynthesizerKind::MFS, shape, swap, rng);
    const acr::LossOptions opt{2.0, 0.7, false, false};
    const auto got = acr::total_loss(x, y, outliers, p, opt);
    const auto want = oracle::reference_loss(x, y, outliers, p, 2.0, 0.7);
    CHECK(std::abs(got.loss.l_cls - want.cls) <= 1e-12);
    CHECK(std::abs(got.loss.l_outlier - want.outlier) <= 1e-12);
    CHECK(std::abs(got.loss.l_acl - want.acl) <= 1e-12);
    CHECK(std::abs(got.loss.total - want.total) <= 1e-12);
  }
}

TEST_CASE("whole-model gradient agrees with finite differences") {
  acr::RandomStream rng(5);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 10; ++trial) {
    const acr::ModelShape shape{2, 3, 4, 3};
    auto p = scaled_init(shape, rng, 2.0);
    const auto x = random_inputs(2, 2, 3, rng);
    const std::vector<int> y{0, 2};
    const auto outliers = acr::make_outlier_batch(y, 2, acr::SynthesizerKind::MFS, shape,
                                                  acr::SwapConfig{1, 4, 3}, rng);
    const acr::LossOptions opt;
    const auto base = acr::total_loss(x, y, outliers, p, opt);
    if (!oracle::has_margins(base.record, 3, 1e-3)) continue;
    const auto res = oracle::check_gradient(p.tensors(), base.grad.tensors(), [&] {
      return acr::total_loss(x, y, outliers, p, opt).loss.total;
    });
    CHECK(res.max_rel_error <= 1e-4);
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("detached outliers only train the fusion head through the outlier term") {
  acr::RandomStream rng(6);
  const acr::ModelShape shape{2, 3, 4, 3};
  const auto p = scaled_init(shape, rng, 2.0);
  const auto x = random_inputs(2, 2, 3, rng);
  const std::vector<int> y{1, 0};
  const auto outliers = acr::make_outlier_batch(y, 2, acr::SynthesizerKind::MFS, shape,
                                                acr::SwapConfig{1, 4, 3}, rng);
  acr::LossOptions opt;
  opt.detach_outliers = true;
  const auto with = acr::total_loss(x, y, outliers, p, opt);
  const auto without = acr::total_loss(x, y, acr::OutlierBatch{}, p, opt);
  CHECK(with.grad.encoder_weight(0) == without.grad.encoder_weight(0));
  CHECK(with.grad.head_weight(1) == without.grad.head_weight(1));
  CHECK_FALSE(with.grad.fusion_weight() == without.grad.fusion_weight());
}

TEST_CASE("component removal reduces to multi-head cross-entropy") {
  acr::RandomStream rng(7);
  const acr::ModelShape shape{2, 3, 4, 3};
  const auto p = scaled_init(shape, rng, 2.0);
  const auto x = random_inputs(2, 4, 3, rng);
  const std::vector<int> y{0, 1, 2, 0};
  const acr::LossOptions opt{0.0, 1.0, false, false};
  const auto out = acr::total_loss(x, y, acr::OutlierBatch{}, p, opt);
  CHECK(out.loss.l_outlier == 0.0);
  CHECK(out.loss.total == out.loss.l_cls);
  const auto ref = oracle::reference_loss(x, y, acr::OutlierBatch{}, p, 0.0, 1.0);
  CHECK(std::abs(out.loss.l_cls - ref.cls) <= 1e-12);
}

TEST_CASE("an outlier with lambda one is pushed to the outlier class") {
  acr::RandomStream rng(8);
  const acr::ModelShape shape{2, 3, 4, 3};
  const auto p = scaled_init(shape, rng, 1.0);
  const auto x = random_inputs(2, 1, 3, rng);
  const std::vector<int> y{1};
  acr::OutlierBatch o;
  o.anchors = {0};
  o.plans = {acr::plan_block_swap(2, 4, 4, std::vector<std::size_t>{0, 0}, 4)};
  o.labels = {acr::soft_label(1.0, 1, 3)};
  const auto out = acr::total_loss(x, y, o, p, acr::LossOptions{});
  // Fully swapped embedding [E2, E1] through the fusion head.
  const auto r = out.record;
  std::vector<double> swapped(8);
  for (std::size_t j = 0; j < 4; ++j) {
    swapped[j] = r.embeddings[1](0, j);
    swapped[4 + j] = r.embeddings[0](0, j);
  }
  std::vector<double> z(4);
  for (std::size_t c = 0; c < 4; ++c) {
    z[c] = p.fusion_bias()(0, c);
    for (std::size_t j = 0; j < 8; ++j) z[c] += swapped[j] * p.fusion_weight()(j, c);
  }
  CHECK(out.loss.l_outlier == Approx(-std::log(oracle::softmax(z)[3])).epsilon(1e-12));
}

TEST_CASE("predict restricts labels to the first C classes") {
  const acr::ModelShape shape{2, 1, 1, 3};
  auto p = acr::ModelParams::zeros(shape);
  // Fused probabilities [0.1, 0.2, 0.3, 0.4] come from logits log(p).
  p.fusion_bias() = Matrix{{std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)}};
  const std::vector<Matrix> x{Matrix{{0.0}}, Matrix{{0.0}}};
  const auto pred = acr::predict(x, p);
  CHECK(pred.labels[0] == 2);
  CHECK(pred.scores[0] == Approx(0.3));
  const auto uniform = acr::predict(x, acr::ModelParams::zeros(shape));
  CHECK(uniform.labels[0] == 0);
}

namespace {

acr::SynthConfig small_data() {
  acr::SynthConfig cfg;
  cfg.n_train = 96;
  cfg.n_val = 48;
  cfg.n_test = 48;
  cfg.seed = 3;
  return cfg;
}

acr::TrainConfig small_train(std::size_t epochs) {
  acr::TrainConfig t;
  t.epochs = epochs;
  t.swap = acr::SwapConfig{4, 16, 6};
  return t;
}

}  // namespace

TEST_CASE("zero epochs returns the initialization") {
  const auto data = acr::make_dataset(small_data());
  const acr::ModelShape shape{2, 16, 16, 6};
  const acr::RandomStream rng(11);
  const auto res = acr::train(small_train(0), shape, data.train, data.val, rng);
  auto init_rng = rng.fork("init");
  CHECK(res.params == acr::ModelParams::init(shape, init_rng));
  CHECK(res.history.empty());
  CHECK(res.best_epoch == 0);
}

TEST_CASE("training is deterministic bit for bit") {
  const auto data = acr::make_dataset(small_data());
  const acr::ModelShape shape{2, 16, 16, 6};
  const auto a = acr::train(small_train(3), shape, data.train, data.val, acr::RandomStream(12));
  const auto b = acr::train(small_train(3), shape, data.train, data.val, acr::RandomStream(12));
  REQUIRE(a.history.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(same_bits(a.history[e].loss_total, b.history[e].loss_total));
    CHECK(same_bits(a.history[e].l_acl, b.history[e].l_acl));
    CHECK(same_bits(a.history[e].val_auroc, b.history[e].val_auroc));
  }
  CHECK(a.params == b.params);
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("non-finite activations surface as divergence") {
  auto data = acr::make_dataset(small_data());
  for (double& v : data.train.inputs[0].values()) v *= 1e300;
  const acr::ModelShape shape{2, 16, 16, 6};
  try {
    acr::train(small_train(2), shape, data.train, data.val, acr::RandomStream(1));
    FAIL("expected DivergedTraining");
  } catch (const acr::DivergedTraining& e) {
    CHECK(e.epoch() == 1);
  }
}

TEST_CASE("total loss decreases over the first epochs on the reference benchmark") {
  const auto data = acr::make_dataset(acr::SynthConfig{});
  const acr::ModelShape shape{2, 16, 256, 6};
  for (bool full : {false, true}) {
    acr::TrainConfig t;
    t.epochs = 5;
    t.loss.lambda_acl = full ? 2.0 : 0.0;
    t.outlier_ratio = full ? 1.0 : 0.0;
    const auto res = acr::train(t, shape, data.train, data.val, acr::RandomStream(0).fork("model"));
    for (std::size_t e = 1; e < res.history.size(); ++e) {
      CHECK(res.history[e].loss_total < res.history[e - 1].loss_total);
    }
  }
}
