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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include "acr/error.hpp"
#include "acr/experiment.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using doctest::Approx;

namespace {

const fs::path kFixtures = ACR_FIXTURE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

acr::ExperimentConfig tiny_config() {
  acr::ExperimentConfig cfg;
  cfg.data.n_train = 64;
  cfg.data.n_val = 32;
  cfg.data.n_test = 40;
  cfg.epochs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("defaults match the reference hyperparameters") {
  const acr::ExperimentConfig cfg;
  CHECK(cfg.lambda_acl == 2.0);
  CHECK(cfg.n_min == 32);
  CHECK(cfg.n_max == 256);
  CHECK(cfg.epochs == 50);
  CHECK(cfg.lr == 1e-4);
  CHECK(cfg.batch == 16);
  CHECK(cfg.method == "acr");
  CHECK_NOTHROW(acr::validate(cfg));
}

TEST_CASE("config json round-trip and strictness") {
  auto cfg = tiny_config();
  cfg.method = "ablation:feature_mix";
  cfg.seeds = {3, 4};
  const auto back = acr::config_from_json(acr::config_to_json(cfg));
  CHECK(acr::config_to_json(back) == acr::config_to_json(cfg));
  CHECK_THROWS_AS(acr::config_from_json(nlohmann::json{{"bogus", 1}}), acr::InvalidConfig);
  CHECK_THROWS_AS(acr::config_from_json(nlohmann::json{{"epochs", "ten"}}), acr::InvalidConfig);
  CHECK_THROWS_AS(acr::config_from_json(nlohmann::json{{"epochs", -1}}), acr::InvalidConfig);
  CHECK_THROWS_AS(acr::config_from_json(nlohmann::json{{"method", "magic"}}), acr::InvalidConfig);
  CHECK_THROWS_AS(acr::config_from_json(nlohmann::json{{"n_max", 512}}), acr::InvalidConfig);
  CHECK_THROWS_AS(acr::config_from_json(nlohmann::json::array()), acr::InvalidConfig);
  CHECK(acr::config_from_json(nlohmann::json{{"embed_dim", 512}, {"n_max", 512}}).n_max == 512);
}

TEST_CASE("methods map onto loss components") {
  auto cfg = tiny_config();
  cfg.method = "baseline";
  auto t = acr::train_config(cfg);
  CHECK(t.loss.lambda_acl == 0.0);
  CHECK(t.outlier_ratio == 0.0);
  cfg.method = "acl_only";
  t = acr::train_config(cfg);
  CHECK(t.loss.lambda_acl == 2.0);
  CHECK(t.outlier_ratio == 0.0);
  cfg.method = "mfs_only";
  t = acr::train_config(cfg);
  CHECK(t.loss.lambda_acl == 0.0);
  CHECK(t.outlier_ratio == 1.0);
  cfg.method = "ablation:random_drop";
  t = acr::train_config(cfg);
  CHECK(t.synthesizer == acr::SynthesizerKind::RandomDrop);
  CHECK(t.loss.lambda_acl == 2.0);
}

TEST_CASE("the four-sample fixture evaluates to 145.83") {
  const auto dump = acr::read_logit_dump(kFixtures / "aurc4.csv");
  const auto r = acr::evaluate_dump(dump, acr::ScorerSpec{});
  CHECK(*r.aurc_x1000 == Approx(145.83).epsilon(0.01 / 145.83));
  CHECK(*r.acc == Approx(0.75));
  CHECK(*r.auroc == Approx(2.0 / 3.0));
}

TEST_CASE("all-correct dumps report undefined rank metrics") {
  std::stringstream ss(
      "sample_id,label,ood_flag,fused_logit_0,fused_logit_1,fused_logit_2\n"
      "0,0,0,3,0,0\n"
      "1,1,0,0,2,0\n");
  const auto r = acr::evaluate_dump(acr::read_logit_dump(ss), acr::ScorerSpec{});
  CHECK(*r.aurc_x1000 == 0.0);
  CHECK_FALSE(r.auroc.has_value());
  CHECK_FALSE(r.fpr95.has_value());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("DegenerateSplit") != std::string::npos);
  const auto j = acr::metrics_to_json(r);
  CHECK(j["auroc"].is_null());
}

TEST_CASE("OOD rows count as failures") {
  const auto dump = acr::read_logit_dump(kFixtures / "ood.csv");
  const auto r = acr::evaluate_dump(dump, acr::ScorerSpec{});
  // Rows 0 and 1 are correct; row 2 is OOD; row 3 predicts class 1 for label 0.
  CHECK(r.correct == std::vector<bool>{true, true, false, false});
  CHECK(*r.acc == Approx(2.0 / 3.0));
  REQUIRE(r.degradation_rate_correct.has_value());
  REQUIRE(r.degradation_rate_incorrect.has_value());
}

TEST_CASE("accuracy does not depend on the scorer") {
  const auto dump = acr::read_logit_dump(kFixtures / "ood.csv");
  acr::ScorerSpec msp, maxlogit;
  maxlogit.kind = acr::ScorerKind::MaxLogit;
  CHECK(*acr::evaluate_dump(dump, msp).acc == *acr::evaluate_dump(dump, maxlogit).acc);
}

TEST_CASE("metrics json has exactly the documented keys") {
  const auto dump = acr::read_logit_dump(kFixtures / "aurc4.csv");
  const auto j = acr::metrics_to_json(acr::evaluate_dump(dump, acr::ScorerSpec{}));
  std::set<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"aurc_x1000", "auroc", "fpr95", "acc", "degradation_rate_correct",
                                      "degradation_rate_incorrect"});
}

TEST_CASE("train outputs are reproducible and re-evaluate exactly") {
  const auto cfg = tiny_config();
  const auto dir_a = fs::temp_directory_path() / "acr_test_exp_a";
  const auto dir_b = fs::temp_directory_path() / "acr_test_exp_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  acr::write_experiment_outputs(cfg, acr::run_experiment(cfg), dir_a);
  acr::write_experiment_outputs(cfg, acr::run_experiment(cfg), dir_b);
  for (const char* f : {"metrics.json", "rc_curve.csv", "history.csv", "hist_scores.csv", "model.ckpt",
                        "test_logits.csv"}) {
    CHECK_MESSAGE(slurp(dir_a / f) == slurp(dir_b / f), f);
  }
  const auto re = acr::evaluate_dump(acr::read_logit_dump(dir_a / "test_logits.csv"), cfg.scorer);
  const auto j = nlohmann::json::parse(slurp(dir_a / "metrics.json"));
  const auto k = acr::metrics_to_json(re);
  for (const auto& [key, v] : j.items()) {
    if (v.is_null()) {
      CHECK(k[key].is_null());
    } else {
      CHECK(std::abs(v.get<double>() - k[key].get<double>()) <= 1e-9);
    }
  }
}

TEST_CASE("sweep with one seed and one arm has zero spread") {
  auto cfg = tiny_config();
  cfg.arms = {"baseline"};
  cfg.seeds = {5};
  cfg.workers = 1;
  const auto sweep = acr::run_sweep(cfg);
  REQUIRE(sweep.rows.size() == 1);
  const auto path = fs::temp_directory_path() / "acr_test_sweep.csv";
  acr::write_sweep_csv(sweep, cfg.arms, path);
  std::ifstream is(path);
  std::string line, std_row;
  while (std::getline(is, line)) {
    if (line.rfind("baseline,std", 0) == 0) std_row = line;
  }
  REQUIRE_FALSE(std_row.empty());
  CHECK(std_row.find("baseline,std,0,") == 0);
}

TEST_CASE("sweep results do not depend on the worker count") {
  auto cfg = tiny_config();
  cfg.arms = {"baseline", "acr"};
  cfg.seeds = {1, 2};
  cfg.workers = 1;
  const auto serial = acr::run_sweep(cfg);
  cfg.workers = 3;
  const auto parallel = acr::run_sweep(cfg);
  REQUIRE(serial.rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(serial.rows[i].arm == parallel.rows[i].arm);
    CHECK(serial.rows[i].seed == parallel.rows[i].seed);
    CHECK(serial.rows[i].metrics.scores == parallel.rows[i].metrics.scores);
  }
}

TEST_CASE("reference benchmark baseline lands in the calibrated accuracy band") {
  acr::ExperimentConfig cfg;
  cfg.method = "baseline";
  const auto r = acr::run_experiment(cfg);
  CHECK(*r.metrics.acc > 0.55);
  CHECK(*r.metrics.acc < 0.95);
}

TEST_CASE("acr lowers the mean score of incorrect predictions") {
  const auto mean_incorrect = [](const acr::MetricsReport& m) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
      if (m.correct[i]) continue;
      total += m.scores[i];
      ++n;
    }
    return total / static_cast<double>(n);
  };
  acr::ExperimentConfig cfg;
  cfg.method = "baseline";
  const double base = mean_incorrect(acr::run_experiment(cfg).metrics);
  cfg.method = "acr";
  const double ours = mean_incorrect(acr::run_experiment(cfg).metrics);
  CHECK(ours < base);
}
