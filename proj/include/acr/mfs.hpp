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

// Outlier synthesis in embedding space.
//
// Every synthesizer is expressed as an OutlierPlan: for each position of the
// concatenated output embedding [E~1, ..., E~M] the plan records either the
// position of the concatenated input it copies from or a constant fill value.
// Plans depend only on the random stream, never on embedding values, which
// lets the trainer route outlier-loss gradients back into the encoders.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acr/numerics.hpp"

namespace acr {

struct SwapConfig {
  std::size_t n_min = 32;
  std::size_t n_max = 256;
  std::size_t outlier_class = 0;  // index C of the extra class; labels have C + 1 entries
};

// Requires 1 <= n_min <= n_max <= width.
void validate(const SwapConfig& cfg, std::size_t width);

enum class SynthesizerKind { MFS, RandomNoise, RandomDrop, FeatureMix };

// Accepts mfs|random_noise|random_drop|feature_mix.
SynthesizerKind parse_synthesizer(std::string_view name);
std::string synthesizer_name(SynthesizerKind kind);

struct OutlierPlan {
  static constexpr std::ptrdiff_t kFill = -1;

  std::size_t modalities = 0;
  std::size_t width = 0;  // per-modality embedding width
  std::size_t n_swap = 0;
  double lambda = 0.0;  // n_swap / n_max
  std::vector<std::ptrdiff_t> source;  // modalities * width entries
  std::vector<double> fill;            // used where source == kFill

  // Builds the concatenated outlier embedding from a concatenated input.
  std::vector<double> apply(std::span<const double> embedding) const;
};

// Identity plan: every output position copies itself.
OutlierPlan identity_plan(std::size_t modalities, std::size_t width);

// Block k of modality k receives block k-1 (mod M) of modality k-1; for M=2
// this is the two-way exchange.
OutlierPlan plan_block_swap(std::size_t modalities, std::size_t width, std::size_t n_swap,
                            std::span<const std::size_t> starts, std::size_t n_max);

// Position indices[k][j] of modality k receives position indices[k-1][j] of
// modality k-1 (mod M).
OutlierPlan plan_index_swap(std::size_t modalities, std::size_t width,
                            const std::vector<std::vector<std::size_t>>& indices,
                            std::size_t n_max);

OutlierPlan plan_mfs(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                     RandomStream& rng);
OutlierPlan plan_random_noise(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                              RandomStream& rng);
OutlierPlan plan_random_drop(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                             RandomStream& rng);
OutlierPlan plan_feature_mix(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                             RandomStream& rng);
OutlierPlan plan_outlier(SynthesizerKind kind, std::size_t modalities, std::size_t width,
                         const SwapConfig& cfg, RandomStream& rng);

// (1 - lambda) at y_true, lambda at index num_classes; length num_classes + 1.
std::vector<double> soft_label(double lambda, std::size_t y_true, std::size_t num_classes);

struct SynthesizedOutlier {
  std::vector<std::vector<double>> embeddings;  // one row per modality
  std::vector<double> label;
  double lambda = 0.0;
  std::size_t n_swap = 0;
};

using EmbeddingSet = std::vector<std::vector<double>>;

SynthesizedOutlier synthesize(const OutlierPlan& plan, const EmbeddingSet& embeddings,
                              std::size_t y_true, const SwapConfig& cfg);

SynthesizedOutlier mfs_two(std::span<const double> e1, std::span<const double> e2,
                           std::size_t y_true, const SwapConfig& cfg, RandomStream& rng);
SynthesizedOutlier mfs_cyclic(const EmbeddingSet& embeddings, std::size_t y_true,
                              const SwapConfig& cfg, RandomStream& rng);
SynthesizedOutlier aug_random_noise(const EmbeddingSet& embeddings, std::size_t y_true,
                                    const SwapConfig& cfg, RandomStream& rng);
SynthesizedOutlier aug_random_drop(const EmbeddingSet& embeddings, std::size_t y_true,
                                   const SwapConfig& cfg, RandomStream& rng);
SynthesizedOutlier aug_feature_mix(const EmbeddingSet& embeddings, std::size_t y_true,
                                   const SwapConfig& cfg, RandomStream& rng);

}  // namespace acr
