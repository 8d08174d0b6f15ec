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

// Late-fusion multimodal classifier with per-modality heads, the three
// training losses with hand-derived gradients, and the training loop.
//
//   E^k  = max(0, x^k W_k + b_k)                 per-modality encoder
//   z^k  = E^k H_k + c_k        (C outputs)      unimodal head
//   z    = [E^1 .. E^M] H + c   (C + 1 outputs)  fusion head, last = outlier class
//
// The fused confidence is the largest of the first C entries of softmax(z).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acr/mfs.hpp"
#include "acr/numerics.hpp"
#include "acr/scores.hpp"
#include "acr/synth.hpp"

namespace acr {

struct ModelShape {
  std::size_t modalities = 2;
  std::size_t input_dim = 16;
  std::size_t embed_dim = 256;
  std::size_t num_classes = 6;

  bool operator==(const ModelShape&) const = default;
};

// All tensors live in one vector so optimizers and gradient containers share
// a layout: per modality k, [4k] encoder weight, [4k+1] encoder bias,
// [4k+2] head weight, [4k+3] head bias; then fusion weight and fusion bias.
class ModelParams {
 public:
  ModelParams() = default;

  static ModelParams zeros(const ModelShape& shape);
  // Uniform in +-1/sqrt(fan_in) for weights and biases.
  static ModelParams init(const ModelShape& shape, RandomStream& rng);

  const ModelShape& shape() const noexcept { return shape_; }

  Matrix& encoder_weight(std::size_t k) { return tensors_[4 * k]; }
  Matrix& encoder_bias(std::size_t k) { return tensors_[4 * k + 1]; }
  Matrix& head_weight(std::size_t k) { return tensors_[4 * k + 2]; }
  Matrix& head_bias(std::size_t k) { return tensors_[4 * k + 3]; }
  Matrix& fusion_weight() { return tensors_[4 * shape_.modalities]; }
  Matrix& fusion_bias() { return tensors_[4 * shape_.modalities + 1]; }
  const Matrix& encoder_weight(std::size_t k) const { return tensors_[4 * k]; }
  const Matrix& encoder_bias(std::size_t k) const { return tensors_[4 * k + 1]; }
  const Matrix& head_weight(std::size_t k) const { return tensors_[4 * k + 2]; }
  const Matrix& head_bias(std::size_t k) const { return tensors_[4 * k + 3]; }
  const Matrix& fusion_weight() const { return tensors_[4 * shape_.modalities]; }
  const Matrix& fusion_bias() const { return tensors_[4 * shape_.modalities + 1]; }

  std::vector<Matrix>& tensors() noexcept { return tensors_; }
  const std::vector<Matrix>& tensors() const noexcept { return tensors_; }
  std::vector<std::string> tensor_names() const;

  bool all_finite() const;
  bool operator==(const ModelParams&) const = default;

 private:
  ModelShape shape_;
  std::vector<Matrix> tensors_;
};

struct ForwardRecord {
  std::vector<Matrix> pre_activation;  // per modality, n x d_e
  std::vector<Matrix> embeddings;      // per modality, n x d_e
  Matrix fused_input;                  // n x (M d_e), concatenated embeddings
  std::vector<Matrix> uni_logits;      // per modality, n x C
  std::vector<Matrix> uni_probs;       // per modality, n x C
  Matrix fused_logits;                 // n x (C + 1)
  Matrix fused_probs;                  // n x (C + 1)
  std::vector<double> conf;                   // fused confidence per sample
  std::vector<std::size_t> conf_class;        // argmax behind conf
  std::vector<std::vector<double>> uni_conf;  // [k][i]
  std::vector<std::vector<std::size_t>> uni_conf_class;
  bool renormalized = false;

  std::size_t size() const noexcept { return conf.size(); }
};

ForwardRecord forward(std::span<const Matrix> inputs, const ModelParams& params,
                      bool renormalize_over_c = false);

// (1/M) * sum_k max(0, conf_k - conf).
double acl_loss(double conf, std::span<const double> unimodal_confs);

struct LogitGradients {
  Matrix fused;             // n x (C + 1)
  std::vector<Matrix> uni;  // per modality, n x C
};

// Gradient of the batch-mean ACL with respect to every logit. A hinge exactly
// at equality is treated as inactive and argmax ties go to the lowest index.
LogitGradients acl_grad(const ForwardRecord& record);

struct LossOptions {
  double lambda_acl = 2.0;
  double w_uni = 1.0;  // weight of the unimodal cross-entropy terms in L_cls
  bool detach_outliers = false;
  bool renormalize_over_c = false;
};

// Synthetic outliers for one mini-batch; outlier r is derived from batch row
// anchors[r] through plans[r] and supervised with labels[r] (C + 1 entries).
struct OutlierBatch {
  std::vector<std::size_t> anchors;
  std::vector<OutlierPlan> plans;
  std::vector<std::vector<double>> labels;

  std::size_t size() const noexcept { return anchors.size(); }
};

OutlierBatch make_outlier_batch(std::span<const int> labels, std::size_t count,
                                SynthesizerKind kind, const ModelShape& shape,
                                const SwapConfig& swap, RandomStream& rng);

// The concatenated outlier embeddings E_o (one row per outlier).
Matrix outlier_embeddings(const ForwardRecord& record, const OutlierBatch& outliers);

struct LossBreakdown {
  double l_cls = 0.0;
  double l_outlier = 0.0;
  double l_acl = 0.0;
  double total = 0.0;
};

struct LossAndGradient {
  LossBreakdown loss;
  ModelParams grad;
  ForwardRecord record;
};

// L_total = L_cls + L_outlier + lambda_acl * L_acl with exact gradients.
LossAndGradient total_loss(std::span<const Matrix> inputs, std::span<const int> labels,
                           const OutlierBatch& outliers, const ModelParams& params,
                           const LossOptions& options);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  AdamHyper adam;
  LossOptions loss;
  SwapConfig swap;
  SynthesizerKind synthesizer = SynthesizerKind::MFS;
  double outlier_ratio = 1.0;  // synthesized outliers per in-distribution sample
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_total = 0.0;  // batch means of each term
  double l_cls = 0.0;
  double l_outlier = 0.0;
  double l_acl = 0.0;
  double val_acc = 0.0;
  double val_auroc = 0.0;  // NaN when the validation split is degenerate
  double val_aurc = 0.0;
};

struct TrainResult {
  ModelParams params;      // checkpoint with the best validation AUROC
  std::size_t best_epoch;  // 0 when no epoch ran
  std::vector<EpochRecord> history;
};

// Deterministic given `rng`; throws DivergedTraining on a non-finite loss.
TrainResult train(const TrainConfig& config, const ModelShape& shape, const MultimodalBatch& train_set,
                  const MultimodalBatch& val_set, RandomStream rng);

struct Predictions {
  std::vector<int> labels;     // argmax over the first C fused probabilities
  std::vector<double> scores;  // confidence under the chosen scorer
  ForwardRecord record;
};

Predictions predict(std::span<const Matrix> inputs, const ModelParams& params,
                    const ScorerSpec& scorer = {});

}  // namespace acr
