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

#include "acr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acr/error.hpp"
#include "acr/metrics.hpp"

namespace acr {

namespace {

void check_shape(const ModelShape& s) {
  if (s.modalities < 1 || s.input_dim < 1 || s.embed_dim < 1 || s.num_classes < 1) {
    throw InvalidConfig("model shape entries must be >= 1");
  }
}

std::vector<Matrix> empty_tensors(const ModelShape& s) {
  std::vector<Matrix> t;
  for (std::size_t k = 0; k < s.modalities; ++k) {
    t.emplace_back(s.input_dim, s.embed_dim);
    t.emplace_back(1, s.embed_dim);
    t.emplace_back(s.embed_dim, s.num_classes);
    t.emplace_back(1, s.num_classes);
  }
  t.emplace_back(s.modalities * s.embed_dim, s.num_classes + 1);
  t.emplace_back(1, s.num_classes + 1);
  return t;
}

// Softmax of every row, optionally restricted to the first `width` columns.
Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto p = softmax(logits.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

ModelParams ModelParams::zeros(const ModelShape& shape) {
  check_shape(shape);
  ModelParams p;
  p.shape_ = shape;
  p.tensors_ = empty_tensors(shape);
  return p;
}

ModelParams ModelParams::init(const ModelShape& shape, RandomStream& rng) {
  ModelParams p = zeros(shape);
  const auto fan_in = [&](std::size_t index) {
    const std::size_t k = index / 4;
    if (k == shape.modalities) return shape.modalities * shape.embed_dim;
    return (index % 4) < 2 ? shape.input_dim : shape.embed_dim;
  };
  for (std::size_t i = 0; i < p.tensors_.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(i)));
    for (double& w : p.tensors_[i].values()) w = bound * (2.0 * rng_uniform01(rng) - 1.0);
  }
  return p;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < shape_.modalities; ++k) {
    const std::string m = std::to_string(k);
    names.push_back("encoder" + m + ".weight");
    names.push_back("encoder" + m + ".bias");
    names.push_back("head" + m + ".weight");
    names.push_back("head" + m + ".bias");
  }
  names.push_back("fusion.weight");
  names.push_back("fusion.bias");
  return names;
}

bool ModelParams::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(), [](const Matrix& m) { return m.all_finite(); });
}

ForwardRecord forward(std::span<const Matrix> inputs, const ModelParams& params,
                      bool renormalize_over_c) {
  const auto& s = params.shape();
  if (inputs.size() != s.modalities) throw ShapeMismatch("forward: modality count differs from model");
  const std::size_t n = inputs.front().rows();
  for (const auto& x : inputs) {
    if (x.rows() != n || x.cols() != s.input_dim) throw ShapeMismatch("forward: input shape");
  }
  const std::size_t C = s.num_classes;
  ForwardRecord rec;
  rec.renormalized = renormalize_over_c;
  rec.fused_input = Matrix(n, s.modalities * s.embed_dim);
  for (std::size_t k = 0; k < s.modalities; ++k) {
    Matrix pre = matmul(inputs[k], params.encoder_weight(k));
    add_row_bias(pre, params.encoder_bias(k));
    Matrix emb = pre;
    for (double& v : emb.values()) v = std::max(v, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto src = emb.row(i);
      std::copy(src.begin(), src.end(), rec.fused_input.row(i).begin() + static_cast<std::ptrdiff_t>(k * s.embed_dim));
    }
    Matrix z = matmul(emb, params.head_weight(k));
    add_row_bias(z, params.head_bias(k));
    Matrix p = softmax_rows(z);
    std::vector<double> conf(n);
    std::vector<std::size_t> cls(n);
    for (std::size_t i = 0; i < n; ++i) {
      cls[i] = argmax(p.row(i));
      conf[i] = p(i, cls[i]);
    }
    rec.pre_activation.push_back(std::move(pre));
    rec.embeddings.push_back(std::move(emb));
    rec.uni_logits.push_back(std::move(z));
    rec.uni_probs.push_back(std::move(p));
    rec.uni_conf.push_back(std::move(conf));
    rec.uni_conf_class.push_back(std::move(cls));
  }
  rec.fused_logits = matmul(rec.fused_input, params.fusion_weight());
  add_row_bias(rec.fused_logits, params.fusion_bias());
  rec.fused_probs = softmax_rows(rec.fused_logits);
  rec.conf.resize(n);
  rec.conf_class.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto probs = class_probs(rec.fused_logits.row(i), C, renormalize_over_c);
    rec.conf_class[i] = argmax(probs);
    rec.conf[i] = probs[rec.conf_class[i]];
  }
  return rec;
}

double acl_loss(double conf, std::span<const double> unimodal_confs) {
  if (unimodal_confs.empty()) return 0.0;
  double total = 0.0;
  for (double c : unimodal_confs) total += std::max(0.0, c - conf);
  return total / static_cast<double>(unimodal_confs.size());
}

LogitGradients acl_grad(const ForwardRecord& rec) {
  const std::size_t n = rec.size();
  const std::size_t M = rec.uni_logits.size();
  const std::size_t C = M > 0 ? rec.uni_logits.front().cols() : rec.fused_logits.cols() - 1;
  LogitGradients g;
  g.fused = Matrix(n, rec.fused_logits.cols());
  for (const auto& z : rec.uni_logits) g.uni.emplace_back(z.rows(), z.cols());
  if (n == 0 || M == 0) return g;
  const double scale = 1.0 / (static_cast<double>(M) * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t active = 0;
    for (std::size_t k = 0; k < M; ++k) {
      if (rec.uni_conf[k][i] > rec.conf[i]) {
        ++active;
        // d conf_k / d z^k_j = p_c (1[j = c] - p_j)
        const std::size_t c = rec.uni_conf_class[k][i];
        const auto p = rec.uni_probs[k].row(i);
        auto dz = g.uni[k].row(i);
        for (std::size_t j = 0; j < dz.size(); ++j) {
          dz[j] += scale * p[c] * ((j == c ? 1.0 : 0.0) - p[j]);
        }
      }
    }
    if (active == 0) continue;
    const double d_conf = -scale * static_cast<double>(active);
    const std::size_t c = rec.conf_class[i];
    auto dz = g.fused.row(i);
    if (rec.renormalized) {
      const auto q = softmax(rec.fused_logits.row(i).first(C));
      for (std::size_t j = 0; j < C; ++j) dz[j] += d_conf * q[c] * ((j == c ? 1.0 : 0.0) - q[j]);
    } else {
      const auto p = rec.fused_probs.row(i);
      for (std::size_t j = 0; j < dz.size(); ++j) dz[j] += d_conf * p[c] * ((j == c ? 1.0 : 0.0) - p[j]);
    }
  }
  return g;
}

OutlierBatch make_outlier_batch(std::span<const int> labels, std::size_t count,
                                SynthesizerKind kind, const ModelShape& shape,
                                const SwapConfig& swap, RandomStream& rng) {
  if (count > labels.size()) throw InvalidInput("make_outlier_batch: more outliers than samples");
  OutlierBatch out;
  for (std::size_t r = 0; r < count; ++r) {
    auto plan = plan_outlier(kind, shape.modalities, shape.embed_dim, swap, rng);
    out.labels.push_back(soft_label(plan.lambda, static_cast<std::size_t>(labels[r]), shape.num_classes));
    out.anchors.push_back(r);
    out.plans.push_back(std::move(plan));
  }
  return out;
}

Matrix outlier_embeddings(const ForwardRecord& record, const OutlierBatch& outliers) {
  Matrix out(outliers.size(), record.fused_input.cols());
  for (std::size_t r = 0; r < outliers.size(); ++r) {
    const auto row = outliers.plans[r].apply(record.fused_input.row(outliers.anchors[r]));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

LossAndGradient total_loss(std::span<const Matrix> inputs, std::span<const int> labels,
                           const OutlierBatch& outliers, const ModelParams& params,
                           const LossOptions& options) {
  if (!(options.lambda_acl >= 0.0)) throw InvalidConfig("lambda_acl must be >= 0");
  const auto& s = params.shape();
  const std::size_t C = s.num_classes;
  const std::size_t M = s.modalities;
  const std::size_t de = s.embed_dim;

  LossAndGradient out;
  out.record = forward(inputs, params, options.renormalize_over_c);
  const auto& rec = out.record;
  const std::size_t n = rec.size();
  if (labels.size() != n) throw ShapeMismatch("total_loss: label count differs from batch");
  if (n == 0) throw InvalidInput("total_loss: empty batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= C) throw InvalidInput("total_loss: label out of range");
  }
  for (std::size_t r = 0; r < outliers.size(); ++r) {
    if (outliers.anchors[r] >= n) throw ShapeMismatch("total_loss: outlier anchor out of range");
    if (outliers.labels[r].size() != C + 1) throw ShapeMismatch("total_loss: outlier label width");
  }

  out.grad = ModelParams::zeros(s);
  auto& g = out.grad;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Classification terms. CE(softmax(z), onehot(y)) has gradient p - onehot(y).
  Matrix d_fused(n, C + 1);
  std::vector<Matrix> d_uni;
  double l_cls = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    l_cls -= std::log(rec.fused_probs(i, y));
    auto dz = d_fused.row(i);
    auto p = rec.fused_probs.row(i);
    for (std::size_t j = 0; j <= C; ++j) dz[j] = inv_n * (p[j] - (j == y ? 1.0 : 0.0));
  }
  for (std::size_t k = 0; k < M; ++k) {
    Matrix dk(n, C);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = static_cast<std::size_t>(labels[i]);
      l_cls -= options.w_uni * std::log(rec.uni_probs[k](i, y));
      auto p = rec.uni_probs[k].row(i);
      auto dz = dk.row(i);
      for (std::size_t j = 0; j < C; ++j) dz[j] = options.w_uni * inv_n * (p[j] - (j == y ? 1.0 : 0.0));
    }
    d_uni.push_back(std::move(dk));
  }
  out.loss.l_cls = l_cls * inv_n;

  // Adaptive confidence term.
  double l_acl = 0.0;
  std::vector<double> confs(M);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < M; ++k) confs[k] = rec.uni_conf[k][i];
    l_acl += acl_loss(rec.conf[i], confs);
  }
  out.loss.l_acl = l_acl * inv_n;
  if (options.lambda_acl > 0.0) {
    const auto acl = acl_grad(rec);
    for (std::size_t t = 0; t < d_fused.size(); ++t) {
      d_fused.values()[t] += options.lambda_acl * acl.fused.values()[t];
    }
    for (std::size_t k = 0; k < M; ++k) {
      for (std::size_t t = 0; t < d_uni[k].size(); ++t) {
        d_uni[k].values()[t] += options.lambda_acl * acl.uni[k].values()[t];
      }
    }
  }

  // Fusion head on in-distribution embeddings.
  g.fusion_weight() = matmul_tn(rec.fused_input, d_fused);
  g.fusion_bias() = column_sums(d_fused);
  Matrix d_concat = matmul_nt(d_fused, params.fusion_weight());

  // Synthetic outliers pass through the fusion head only.
  if (outliers.size() > 0) {
    const std::size_t n_o = outliers.size();
    const double inv_o = 1.0 / static_cast<double>(n_o);
    const Matrix e_o = outlier_embeddings(rec, outliers);
    Matrix z_o = matmul(e_o, params.fusion_weight());
    add_row_bias(z_o, params.fusion_bias());
    Matrix d_o(n_o, C + 1);
    double l_out = 0.0;
    for (std::size_t r = 0; r < n_o; ++r) {
      const auto p = softmax(z_o.row(r));
      const auto& target = outliers.labels[r];
      l_out += cross_entropy_soft(p, target);
      // Soft targets sum to one, so the gradient is still p - target.
      auto dz = d_o.row(r);
      for (std::size_t j = 0; j <= C; ++j) dz[j] = inv_o * (p[j] - target[j]);
    }
    out.loss.l_outlier = l_out * inv_o;
    const Matrix gw = matmul_tn(e_o, d_o);
    const Matrix gb = column_sums(d_o);
    for (std::size_t t = 0; t < gw.size(); ++t) g.fusion_weight().values()[t] += gw.values()[t];
    for (std::size_t t = 0; t < gb.size(); ++t) g.fusion_bias().values()[t] += gb.values()[t];
    if (!options.detach_outliers) {
      const Matrix d_eo = matmul_nt(d_o, params.fusion_weight());
      for (std::size_t r = 0; r < n_o; ++r) {
        const auto& plan = outliers.plans[r];
        auto dst = d_concat.row(outliers.anchors[r]);
        auto src = d_eo.row(r);
        for (std::size_t i = 0; i < plan.source.size(); ++i) {
          if (plan.source[i] != OutlierPlan::kFill) dst[static_cast<std::size_t>(plan.source[i])] += src[i];
        }
      }
    }
  }

  // Unimodal heads and encoders.
  for (std::size_t k = 0; k < M; ++k) {
    const auto& emb = rec.embeddings[k];
    g.head_weight(k) = matmul_tn(emb, d_uni[k]);
    g.head_bias(k) = column_sums(d_uni[k]);
    Matrix d_emb = matmul_nt(d_uni[k], params.head_weight(k));
    for (std::size_t i = 0; i < n; ++i) {
      auto d = d_emb.row(i);
      auto from_fusion = d_concat.row(i).subspan(k * de, de);
      auto pre = rec.pre_activation[k].row(i);
      for (std::size_t j = 0; j < de; ++j) {
        d[j] = pre[j] > 0.0 ? d[j] + from_fusion[j] : 0.0;
      }
    }
    g.encoder_weight(k) = matmul_tn(inputs[k], d_emb);
    g.encoder_bias(k) = column_sums(d_emb);
  }

  out.loss.total = out.loss.l_cls + out.loss.l_outlier + options.lambda_acl * out.loss.l_acl;
  return out;
}

namespace {

struct ValidationScore {
  double acc = 0.0;
  double auroc = std::numeric_limits<double>::quiet_NaN();
  double aurc = 0.0;
  double selection_key = 0.0;
};

ValidationScore validate_model(const ModelParams& params, const MultimodalBatch& val,
                               bool renormalize) {
  ScorerSpec msp;
  msp.renormalize_over_c = renormalize;
  const auto pred = predict(val.inputs, params, msp);
  std::vector<bool> correct(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) correct[i] = pred.labels[i] == val.labels[i];
  ValidationScore v;
  v.acc = accuracy(pred.labels, val.labels);
  v.aurc = aurc(pred.scores, correct);
  if (v.acc == 1.0) {
    v.selection_key = 1.0;
  } else if (v.acc == 0.0) {
    v.selection_key = 0.0;
  } else {
    v.auroc = auroc(pred.scores, correct);
    v.selection_key = v.auroc;
  }
  return v;
}

}  // namespace

TrainResult train(const TrainConfig& config, const ModelShape& shape, const MultimodalBatch& train_set,
                  const MultimodalBatch& val_set, RandomStream rng) {
  if (config.batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (!(config.outlier_ratio >= 0.0 && config.outlier_ratio <= 1.0)) {
    throw InvalidConfig("outlier_ratio must lie in [0, 1]");
  }
  if (config.outlier_ratio > 0.0) validate(config.swap, shape.embed_dim);
  if (train_set.size() == 0 || val_set.size() == 0) throw InvalidInput("train: empty split");
  if (train_set.modalities() != shape.modalities) throw ShapeMismatch("train: modality count");
  for (const auto& x : train_set.inputs) {
    if (!x.all_finite()) throw InvalidInput("train: non-finite input");
  }

  auto init_rng = rng.fork("init");
  const auto shuffle_rng = rng.fork("shuffle");
  const auto outlier_rng = rng.fork("outliers");

  TrainResult result;
  ModelParams params = ModelParams::init(shape, init_rng);
  result.params = params;
  result.best_epoch = 0;
  double best_key = -std::numeric_limits<double>::infinity();
  AdamState adam = AdamState::for_params(params.tensors(), config.adam);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto epoch_shuffle = shuffle_rng.fork(epoch);
    auto epoch_outliers = outlier_rng.fork(epoch);
    const auto order = rng_permutation(epoch_shuffle, train_set.size());
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const MultimodalBatch batch = train_set.subset(rows);
      const auto n_out = static_cast<std::size_t>(
          std::llround(config.outlier_ratio * static_cast<double>(batch.size())));
      OutlierBatch outliers;
      if (n_out > 0) {
        outliers = make_outlier_batch(batch.labels, n_out, config.synthesizer, shape, config.swap,
                                      epoch_outliers);
      }
      // Inputs are finite, so any non-finite intermediate means the run diverged.
      LossAndGradient step;
      try {
        step = total_loss(batch.inputs, batch.labels, outliers, params, config.loss);
      } catch (const InvalidInput& e) {
        throw DivergedTraining(static_cast<int>(epoch), e.what());
      }
      if (!std::isfinite(step.loss.total)) {
        throw DivergedTraining(static_cast<int>(epoch), "non-finite loss");
      }
      adam_step(params.tensors(), step.grad.tensors(), adam);
      rec.loss_total += step.loss.total;
      rec.l_cls += step.loss.l_cls;
      rec.l_outlier += step.loss.l_outlier;
      rec.l_acl += step.loss.l_acl;
      ++batches;
    }
    const double inv_b = 1.0 / static_cast<double>(batches);
    rec.loss_total *= inv_b;
    rec.l_cls *= inv_b;
    rec.l_outlier *= inv_b;
    rec.l_acl *= inv_b;
    if (!params.all_finite()) throw DivergedTraining(static_cast<int>(epoch), "non-finite parameters");
    const auto v = validate_model(params, val_set, config.loss.renormalize_over_c);
    rec.val_acc = v.acc;
    rec.val_auroc = v.auroc;
    rec.val_aurc = v.aurc;
    if (v.selection_key > best_key) {
      best_key = v.selection_key;
      result.params = params;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
  }
  return result;
}

Predictions predict(std::span<const Matrix> inputs, const ModelParams& params,
                    const ScorerSpec& scorer) {
  const std::size_t C = params.shape().num_classes;
  validate(scorer, C);
  Predictions out;
  out.record = forward(inputs, params, scorer.renormalize_over_c);
  const std::size_t n = out.record.size();
  out.labels.resize(n);
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto logits = out.record.fused_logits.row(i);
    out.labels[i] = static_cast<int>(predict_label(logits, C));
    out.scores[i] = score_logits(logits, C, scorer);
  }
  return out;
}

}  // namespace acr
