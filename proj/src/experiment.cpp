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

#include "acr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <thread>

#include "acr/error.hpp"

namespace acr {

Method parse_method(const std::string& name) {
  Method m;
  if (name == "baseline") return m;
  if (name == "acr") {
    m.use_acl = m.use_outliers = true;
    return m;
  }
  if (name == "acl_only") {
    m.use_acl = true;
    return m;
  }
  if (name == "mfs_only") {
    m.use_outliers = true;
    return m;
  }
  const std::string prefix = "ablation:";
  if (name.rfind(prefix, 0) == 0) {
    m.use_acl = m.use_outliers = true;
    m.synthesizer = parse_synthesizer(name.substr(prefix.size()));
    return m;
  }
  throw InvalidConfig("unknown method '" + name + "'");
}

namespace {

using json = nlohmann::json;

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) throw InvalidConfig("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!value.is_number()) throw InvalidConfig("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw InvalidConfig("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) throw InvalidConfig("");
    }
    return value.get<T>();
  } catch (const std::exception&) {
    throw InvalidConfig("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidConfig("config must be a JSON object");
  ExperimentConfig cfg;
  using Setter = std::function<void(const json&, const std::string&)>;
  const auto size_field = [](std::size_t& f) {
    return Setter([&f](const json& v, const std::string& k) { f = get_as<std::size_t>(v, k); });
  };
  const auto real_field = [](double& f) {
    return Setter([&f](const json& v, const std::string& k) { f = get_as<double>(v, k); });
  };
  const auto bool_field = [](bool& f) {
    return Setter([&f](const json& v, const std::string& k) { f = get_as<bool>(v, k); });
  };
  const auto string_field = [](std::string& f) {
    return Setter([&f](const json& v, const std::string& k) { f = get_as<std::string>(v, k); });
  };
  const std::map<std::string, Setter> setters{
      {"num_classes", size_field(cfg.data.num_classes)},
      {"modalities", size_field(cfg.data.modalities)},
      {"input_dim", size_field(cfg.data.input_dim)},
      {"n_train", size_field(cfg.data.n_train)},
      {"n_val", size_field(cfg.data.n_val)},
      {"n_test", size_field(cfg.data.n_test)},
      {"sigma", real_field(cfg.data.sigma)},
      {"rho_conflict", real_field(cfg.data.rho_conflict)},
      {"rho_noise", real_field(cfg.data.rho_noise)},
      {"sigma_noise", real_field(cfg.data.sigma_noise)},
      {"conflict_modality", size_field(cfg.data.conflict_modality)},
      {"seed", [&](const json& v, const std::string& k) { cfg.data.seed = get_as<std::uint64_t>(v, k); }},
      {"embed_dim", size_field(cfg.embed_dim)},
      {"method", string_field(cfg.method)},
      {"lambda_acl", real_field(cfg.lambda_acl)},
      {"n_min", size_field(cfg.n_min)},
      {"n_max", size_field(cfg.n_max)},
      {"w_uni", real_field(cfg.w_uni)},
      {"epochs", size_field(cfg.epochs)},
      {"lr", real_field(cfg.lr)},
      {"batch", size_field(cfg.batch)},
      {"outlier_ratio", real_field(cfg.outlier_ratio)},
      {"detach_outliers", bool_field(cfg.detach_outliers)},
      {"scorer", [&](const json& v, const std::string& k) {
         cfg.scorer.kind = parse_scorer_kind(get_as<std::string>(v, k));
       }},
      {"temperature", real_field(cfg.scorer.temperature)},
      {"gamma", real_field(cfg.scorer.gamma)},
      {"top_m", size_field(cfg.scorer.top_m)},
      {"renormalize_over_c", bool_field(cfg.scorer.renormalize_over_c)},
      {"shift_sigma", real_field(cfg.shift_sigma)},
      {"shift_modality", size_field(cfg.shift_modality)},
      {"hist_bins", size_field(cfg.hist_bins)},
      {"seeds", [&](const json& v, const std::string& k) {
         if (!v.is_array()) throw InvalidConfig("config key '" + k + "' must be an array");
         cfg.seeds.clear();
         for (const auto& s : v) cfg.seeds.push_back(get_as<std::uint64_t>(s, k));
       }},
      {"arms", [&](const json& v, const std::string& k) {
         if (!v.is_array()) throw InvalidConfig("config key '" + k + "' must be an array");
         cfg.arms.clear();
         for (const auto& a : v) cfg.arms.push_back(get_as<std::string>(a, k));
       }},
      {"workers", size_field(cfg.workers)},
      {"out", string_field(cfg.out)},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InvalidConfig("unknown config key '" + key + "'");
    it->second(value, key);
  }
  validate(cfg);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  return json{
      {"num_classes", cfg.data.num_classes},
      {"modalities", cfg.data.modalities},
      {"input_dim", cfg.data.input_dim},
      {"n_train", cfg.data.n_train},
      {"n_val", cfg.data.n_val},
      {"n_test", cfg.data.n_test},
      {"sigma", cfg.data.sigma},
      {"rho_conflict", cfg.data.rho_conflict},
      {"rho_noise", cfg.data.rho_noise},
      {"sigma_noise", cfg.data.sigma_noise},
      {"conflict_modality", cfg.data.conflict_modality},
      {"seed", cfg.data.seed},
      {"embed_dim", cfg.embed_dim},
      {"method", cfg.method},
      {"lambda_acl", cfg.lambda_acl},
      {"n_min", cfg.n_min},
      {"n_max", cfg.n_max},
      {"w_uni", cfg.w_uni},
      {"epochs", cfg.epochs},
      {"lr", cfg.lr},
      {"batch", cfg.batch},
      {"outlier_ratio", cfg.outlier_ratio},
      {"detach_outliers", cfg.detach_outliers},
      {"scorer", scorer_name(cfg.scorer.kind)},
      {"temperature", cfg.scorer.temperature},
      {"gamma", cfg.scorer.gamma},
      {"top_m", cfg.scorer.top_m},
      {"renormalize_over_c", cfg.scorer.renormalize_over_c},
      {"shift_sigma", cfg.shift_sigma},
      {"shift_modality", cfg.shift_modality},
      {"hist_bins", cfg.hist_bins},
      {"seeds", cfg.seeds},
      {"arms", cfg.arms},
      {"workers", cfg.workers},
      {"out", cfg.out},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidConfig("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("malformed config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.data);
  parse_method(cfg.method);
  for (const auto& arm : cfg.arms) parse_method(arm);
  validate(cfg.scorer, cfg.data.num_classes);
  if (cfg.embed_dim < 1) throw InvalidConfig("embed_dim must be >= 1");
  if (cfg.batch < 1) throw InvalidConfig("batch must be >= 1");
  if (!(cfg.lr > 0.0)) throw InvalidConfig("lr must be > 0");
  if (!(cfg.lambda_acl >= 0.0)) throw InvalidConfig("lambda_acl must be >= 0");
  if (!(cfg.w_uni >= 0.0)) throw InvalidConfig("w_uni must be >= 0");
  if (!(cfg.outlier_ratio >= 0.0 && cfg.outlier_ratio <= 1.0)) {
    throw InvalidConfig("outlier_ratio must lie in [0, 1]");
  }
  if (!(cfg.shift_sigma >= 0.0)) throw InvalidConfig("shift_sigma must be >= 0");
  if (cfg.shift_modality >= cfg.data.modalities) throw InvalidConfig("shift_modality out of range");
  if (cfg.hist_bins < 1) throw InvalidConfig("hist_bins must be >= 1");
  if (cfg.seeds.empty()) throw InvalidConfig("seeds must not be empty");
  SwapConfig swap{cfg.n_min, cfg.n_max, cfg.data.num_classes};
  validate(swap, cfg.embed_dim);
}

ModelShape model_shape(const ExperimentConfig& cfg) {
  return ModelShape{cfg.data.modalities, cfg.data.input_dim, cfg.embed_dim, cfg.data.num_classes};
}

TrainConfig train_config(const ExperimentConfig& cfg) {
  const Method method = parse_method(cfg.method);
  TrainConfig t;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch;
  t.adam.lr = cfg.lr;
  t.loss.lambda_acl = method.use_acl ? cfg.lambda_acl : 0.0;
  t.loss.w_uni = cfg.w_uni;
  t.loss.detach_outliers = cfg.detach_outliers;
  t.loss.renormalize_over_c = cfg.scorer.renormalize_over_c;
  t.swap = SwapConfig{cfg.n_min, cfg.n_max, cfg.data.num_classes};
  t.synthesizer = method.synthesizer;
  t.outlier_ratio = method.use_outliers ? cfg.outlier_ratio : 0.0;
  return t;
}

MetricsReport evaluate_dump(const LogitDump& dump, const ScorerSpec& scorer) {
  const std::size_t n = dump.size();
  const std::size_t C = dump.num_classes;
  if (n == 0) throw InvalidInput("evaluate_dump: empty dump");
  validate(scorer, C);
  MetricsReport r;
  r.scores.resize(n);
  r.correct.resize(n);
  std::vector<int> id_pred, id_label;
  std::vector<double> fused_conf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto logits = dump.fused.row(i);
    const int pred = static_cast<int>(predict_label(logits, C));
    r.scores[i] = score_logits(logits, C, scorer);
    r.correct[i] = !dump.ood[i] && pred == dump.labels[i];
    if (!dump.ood[i]) {
      id_pred.push_back(pred);
      id_label.push_back(dump.labels[i]);
    }
    fused_conf[i] = score_msp(class_probs(logits, C, scorer.renormalize_over_c));
  }
  r.curve = risk_coverage(r.scores, r.correct);
  double total = 0.0;
  for (double v : r.curve.risk) total += v;
  r.aurc_x1000 = 1000.0 * total / static_cast<double>(n);
  try {
    r.auroc = auroc(r.scores, r.correct);
    r.fpr95 = fpr_at_95_tpr(r.scores, r.correct);
  } catch (const DegenerateSplit& e) {
    r.warnings.push_back(std::string("DegenerateSplit: auroc and fpr95 undefined (") + e.what() + ")");
  }
  if (!id_label.empty()) r.acc = accuracy(id_pred, id_label);
  if (!dump.uni.empty()) {
    std::vector<std::vector<double>> uni_conf(dump.uni.size(), std::vector<double>(n));
    for (std::size_t k = 0; k < dump.uni.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) uni_conf[k][i] = score_msp(softmax(dump.uni[k].row(i)));
    }
    const auto deg = degradation_rate(fused_conf, uni_conf, r.correct);
    r.degradation_rate_correct = deg.rate_correct;
    r.degradation_rate_incorrect = deg.rate_incorrect;
  }
  return r;
}

nlohmann::json metrics_to_json(const MetricsReport& report) {
  const auto value = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{
      {"aurc_x1000", value(report.aurc_x1000)},
      {"auroc", value(report.auroc)},
      {"fpr95", value(report.fpr95)},
      {"acc", value(report.acc)},
      {"degradation_rate_correct", value(report.degradation_rate_correct)},
      {"degradation_rate_incorrect", value(report.degradation_rate_incorrect)},
  };
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto data = make_dataset(cfg.data);
  const RandomStream root(cfg.seed());
  ExperimentResult result;
  result.training = train(train_config(cfg), model_shape(cfg), data.train, data.val, root.fork("model"));
  const auto& params = result.training.params;
  const auto evaluate = [&](const MultimodalBatch& batch) {
    const auto record = forward(batch.inputs, params, cfg.scorer.renormalize_over_c);
    return make_logit_dump(record, batch.labels);
  };
  if (cfg.shift_sigma > 0.0) {
    auto shift_rng = root.fork("shift");
    const auto shifted = apply_shift(data.test, cfg.shift_modality, cfg.shift_sigma, shift_rng);
    result.test_dump = evaluate(shifted);
    result.clean_metrics = evaluate_dump(evaluate(data.test), cfg.scorer);
  } else {
    result.test_dump = evaluate(data.test);
  }
  result.metrics = evaluate_dump(result.test_dump, cfg.scorer);
  return result;
}

namespace {

std::ofstream open_text(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

void write_metrics_json(const MetricsReport& report, const std::filesystem::path& path) {
  auto os = open_text(path);
  os << metrics_to_json(report).dump(2) << '\n';
}

void write_rc_curve_csv(const RiskCoverageCurve& curve, const std::filesystem::path& path) {
  auto os = open_text(path);
  os << "coverage,risk\n";
  for (std::size_t i = 0; i < curve.risk.size(); ++i) {
    os << format_real(curve.coverage[i]) << ',' << format_real(curve.risk[i]) << '\n';
  }
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  auto os = open_text(path);
  os << "epoch,loss_total,l_cls,l_outlier,l_acl,val_acc,val_auroc,val_aurc\n";
  for (const auto& e : history) {
    os << e.epoch << ',' << format_real(e.loss_total) << ',' << format_real(e.l_cls) << ','
       << format_real(e.l_outlier) << ',' << format_real(e.l_acl) << ',' << format_real(e.val_acc)
       << ',' << format_real(e.val_auroc) << ',' << format_real(e.val_aurc) << '\n';
  }
}

void write_histogram_csv(const ScoreHistogram& hist, const std::filesystem::path& path) {
  auto os = open_text(path);
  os << "bin_left,bin_right,count_correct,count_incorrect\n";
  for (std::size_t b = 0; b < hist.bin_left.size(); ++b) {
    os << format_real(hist.bin_left[b]) << ',' << format_real(hist.bin_right[b]) << ','
       << hist.count_correct[b] << ',' << hist.count_incorrect[b] << '\n';
  }
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_metrics_json(result.metrics, dir / "metrics.json");
  write_rc_curve_csv(result.metrics.curve, dir / "rc_curve.csv");
  write_history_csv(result.training.history, dir / "history.csv");
  write_histogram_csv(score_histogram(result.metrics.scores, result.metrics.correct, cfg.hist_bins),
                      dir / "hist_scores.csv");
  write_checkpoint(result.training.params, dir / "model.ckpt");
  write_logit_dump(result.test_dump, dir / "test_logits.csv");
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.arms.empty()) throw InvalidConfig("sweep needs at least one arm");
  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (const auto& arm : cfg.arms) {
    for (auto seed : cfg.seeds) jobs.emplace_back(arm, seed);
  }
  std::size_t workers = cfg.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  SweepResult sweep;
  sweep.rows.resize(jobs.size());
  const auto run_job = [&](std::size_t j) {
    ExperimentConfig run = cfg;
    run.method = jobs[j].first;
    run.data.seed = jobs[j].second;
    sweep.rows[j] = SweepRow{jobs[j].first, jobs[j].second, run_experiment(run).metrics};
  };
  // Each job owns its streams, so execution order never changes results.
  for (std::size_t start = 0; start < jobs.size(); start += workers) {
    std::vector<std::future<void>> pending;
    for (std::size_t j = start; j < std::min(jobs.size(), start + workers); ++j) {
      pending.push_back(std::async(workers == 1 ? std::launch::deferred : std::launch::async, run_job, j));
    }
    for (auto& f : pending) f.get();
  }
  return sweep;
}

void write_sweep_csv(const SweepResult& sweep, const std::vector<std::string>& arms,
                     const std::filesystem::path& path) {
  auto os = open_text(path);
  os << "arm,seed,aurc_x1000,auroc,fpr95,acc,degradation_rate_correct,degradation_rate_incorrect\n";
  const auto fields = [](const MetricsReport& m) {
    return std::vector<std::optional<double>>{m.aurc_x1000, m.auroc, m.fpr95, m.acc,
                                              m.degradation_rate_correct, m.degradation_rate_incorrect};
  };
  const auto cell = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& row : sweep.rows) {
    os << row.arm << ',' << row.seed;
    for (const auto& v : fields(row.metrics)) os << ',' << cell(v);
    os << '\n';
  }
  for (const auto& arm : arms) {
    std::vector<std::vector<double>> columns(6);
    for (const auto& row : sweep.rows) {
      if (row.arm != arm) continue;
      const auto f = fields(row.metrics);
      for (std::size_t c = 0; c < f.size(); ++c) {
        if (f[c]) columns[c].push_back(*f[c]);
      }
    }
    std::vector<std::optional<double>> mean(6), stddev(6);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].empty()) continue;
      double m = 0.0;
      for (double v : columns[c]) m += v;
      m /= static_cast<double>(columns[c].size());
      double var = 0.0;
      for (double v : columns[c]) var += (v - m) * (v - m);
      mean[c] = m;
      stddev[c] = std::sqrt(var / static_cast<double>(columns[c].size()));
    }
    os << arm << ",mean";
    for (const auto& v : mean) os << ',' << cell(v);
    os << '\n' << arm << ",std";
    for (const auto& v : stddev) os << ',' << cell(v);
    os << '\n';
  }
}

ScoreHistogram export_histogram(const ModelParams& params, const MultimodalBatch& batch,
                                const ScorerSpec& scorer, std::size_t bins) {
  const auto pred = predict(batch.inputs, params, scorer);
  std::vector<bool> correct(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) correct[i] = pred.labels[i] == batch.labels[i];
  return score_histogram(pred.scores, correct, bins);
}

}  // namespace acr
