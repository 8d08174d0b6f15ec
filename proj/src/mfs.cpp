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

#include "acr/mfs.hpp"

#include <algorithm>
#include <numeric>

#include "acr/error.hpp"

namespace acr {

void validate(const SwapConfig& cfg, std::size_t width) {
  if (cfg.n_min < 1) throw InvalidConfig("swap config: n_min must be >= 1");
  if (cfg.n_min > cfg.n_max) throw InvalidConfig("swap config: n_min exceeds n_max");
  if (cfg.n_max > width) {
    throw InvalidConfig("swap config: n_max (" + std::to_string(cfg.n_max) +
                        ") exceeds embedding width (" + std::to_string(width) + ")");
  }
}

SynthesizerKind parse_synthesizer(std::string_view name) {
  if (name == "mfs") return SynthesizerKind::MFS;
  if (name == "random_noise") return SynthesizerKind::RandomNoise;
  if (name == "random_drop") return SynthesizerKind::RandomDrop;
  if (name == "feature_mix") return SynthesizerKind::FeatureMix;
  throw InvalidConfig("unknown synthesizer '" + std::string(name) + "'");
}

std::string synthesizer_name(SynthesizerKind kind) {
  switch (kind) {
    case SynthesizerKind::MFS: return "mfs";
    case SynthesizerKind::RandomNoise: return "random_noise";
    case SynthesizerKind::RandomDrop: return "random_drop";
    case SynthesizerKind::FeatureMix: return "feature_mix";
  }
  return "unknown";
}

std::vector<double> OutlierPlan::apply(std::span<const double> embedding) const {
  if (embedding.size() != source.size()) throw ShapeMismatch("OutlierPlan::apply: width mismatch");
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    out[i] = source[i] == kFill ? fill[i] : embedding[static_cast<std::size_t>(source[i])];
  }
  return out;
}

OutlierPlan identity_plan(std::size_t modalities, std::size_t width) {
  OutlierPlan plan;
  plan.modalities = modalities;
  plan.width = width;
  plan.source.resize(modalities * width);
  std::iota(plan.source.begin(), plan.source.end(), std::ptrdiff_t{0});
  plan.fill.assign(modalities * width, 0.0);
  return plan;
}

namespace {

std::size_t previous(std::size_t k, std::size_t modalities) {
  return (k + modalities - 1) % modalities;
}

std::size_t draw_n_swap(const SwapConfig& cfg, std::size_t width, RandomStream& rng) {
  validate(cfg, width);
  return static_cast<std::size_t>(rng_uniform_int(rng, static_cast<std::int64_t>(cfg.n_min),
                                                  static_cast<std::int64_t>(cfg.n_max)));
}

std::vector<std::size_t> draw_starts(std::size_t modalities, std::size_t width, std::size_t n_swap,
                                     RandomStream& rng) {
  std::vector<std::size_t> starts(modalities);
  for (auto& s : starts) {
    s = static_cast<std::size_t>(rng_uniform_int(rng, 0, static_cast<std::int64_t>(width - n_swap)));
  }
  return starts;
}

void check_modalities(std::size_t modalities) {
  if (modalities < 2) throw InvalidInput("outlier synthesis needs at least two modalities");
}

// Replaces one contiguous block per modality with values from `draw`.
template <typename Draw>
OutlierPlan plan_block_fill(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                            RandomStream& rng, Draw draw) {
  const std::size_t n_swap = draw_n_swap(cfg, width, rng);
  const auto starts = draw_starts(modalities, width, n_swap, rng);
  OutlierPlan plan = identity_plan(modalities, width);
  plan.n_swap = n_swap;
  plan.lambda = static_cast<double>(n_swap) / static_cast<double>(cfg.n_max);
  for (std::size_t k = 0; k < modalities; ++k) {
    for (std::size_t j = 0; j < n_swap; ++j) {
      const std::size_t pos = k * width + starts[k] + j;
      plan.source[pos] = OutlierPlan::kFill;
      plan.fill[pos] = draw();
    }
  }
  return plan;
}

}  // namespace

OutlierPlan plan_block_swap(std::size_t modalities, std::size_t width, std::size_t n_swap,
                            std::span<const std::size_t> starts, std::size_t n_max) {
  check_modalities(modalities);
  if (starts.size() != modalities) throw ShapeMismatch("plan_block_swap: one start per modality");
  if (n_swap < 1 || n_swap > width || n_max < n_swap) {
    throw InvalidConfig("plan_block_swap: n_swap must lie in [1, min(width, n_max)]");
  }
  for (std::size_t s : starts) {
    if (s + n_swap > width) throw InvalidInput("plan_block_swap: block exceeds embedding width");
  }
  OutlierPlan plan = identity_plan(modalities, width);
  plan.n_swap = n_swap;
  plan.lambda = static_cast<double>(n_swap) / static_cast<double>(n_max);
  for (std::size_t k = 0; k < modalities; ++k) {
    const std::size_t src = previous(k, modalities);
    for (std::size_t j = 0; j < n_swap; ++j) {
      plan.source[k * width + starts[k] + j] =
          static_cast<std::ptrdiff_t>(src * width + starts[src] + j);
    }
  }
  return plan;
}

OutlierPlan plan_index_swap(std::size_t modalities, std::size_t width,
                            const std::vector<std::vector<std::size_t>>& indices,
                            std::size_t n_max) {
  check_modalities(modalities);
  if (indices.size() != modalities) throw ShapeMismatch("plan_index_swap: one index set per modality");
  const std::size_t n_swap = indices.front().size();
  if (n_swap < 1 || n_max < n_swap) throw InvalidConfig("plan_index_swap: bad swap count");
  for (const auto& idx : indices) {
    if (idx.size() != n_swap) throw ShapeMismatch("plan_index_swap: index sets differ in size");
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
        (!sorted.empty() && sorted.back() >= width)) {
      throw InvalidInput("plan_index_swap: indices must be distinct and < width");
    }
  }
  OutlierPlan plan = identity_plan(modalities, width);
  plan.n_swap = n_swap;
  plan.lambda = static_cast<double>(n_swap) / static_cast<double>(n_max);
  for (std::size_t k = 0; k < modalities; ++k) {
    const std::size_t src = previous(k, modalities);
    for (std::size_t j = 0; j < n_swap; ++j) {
      plan.source[k * width + indices[k][j]] =
          static_cast<std::ptrdiff_t>(src * width + indices[src][j]);
    }
  }
  return plan;
}

OutlierPlan plan_mfs(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                     RandomStream& rng) {
  check_modalities(modalities);
  const std::size_t n_swap = draw_n_swap(cfg, width, rng);
  const auto starts = draw_starts(modalities, width, n_swap, rng);
  return plan_block_swap(modalities, width, n_swap, starts, cfg.n_max);
}

OutlierPlan plan_random_noise(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                              RandomStream& rng) {
  check_modalities(modalities);
  return plan_block_fill(modalities, width, cfg, rng, [&] { return rng_normal(rng); });
}

OutlierPlan plan_random_drop(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                             RandomStream& rng) {
  check_modalities(modalities);
  return plan_block_fill(modalities, width, cfg, rng, [] { return 0.0; });
}

OutlierPlan plan_feature_mix(std::size_t modalities, std::size_t width, const SwapConfig& cfg,
                             RandomStream& rng) {
  check_modalities(modalities);
  const std::size_t n_swap = draw_n_swap(cfg, width, rng);
  std::vector<std::vector<std::size_t>> indices(modalities);
  for (auto& idx : indices) {
    // Partial Fisher-Yates: the first n_swap entries are a uniform sample
    // without replacement, in random order.
    std::vector<std::size_t> pool(width);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t j = 0; j < n_swap; ++j) {
      const auto pick = static_cast<std::size_t>(
          rng_uniform_int(rng, static_cast<std::int64_t>(j), static_cast<std::int64_t>(width - 1)));
      std::swap(pool[j], pool[pick]);
    }
    idx.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_swap));
  }
  return plan_index_swap(modalities, width, indices, cfg.n_max);
}

OutlierPlan plan_outlier(SynthesizerKind kind, std::size_t modalities, std::size_t width,
                         const SwapConfig& cfg, RandomStream& rng) {
  switch (kind) {
    case SynthesizerKind::MFS: return plan_mfs(modalities, width, cfg, rng);
    case SynthesizerKind::RandomNoise: return plan_random_noise(modalities, width, cfg, rng);
    case SynthesizerKind::RandomDrop: return plan_random_drop(modalities, width, cfg, rng);
    case SynthesizerKind::FeatureMix: return plan_feature_mix(modalities, width, cfg, rng);
  }
  throw InvalidConfig("plan_outlier: unhandled synthesizer");
}

std::vector<double> soft_label(double lambda, std::size_t y_true, std::size_t num_classes) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("soft_label: lambda outside [0, 1]");
  if (y_true >= num_classes) throw InvalidInput("soft_label: class index out of range");
  std::vector<double> label(num_classes + 1, 0.0);
  label[y_true] += 1.0 - lambda;
  label[num_classes] += lambda;
  return label;
}

namespace {

std::vector<double> concatenate(const EmbeddingSet& embeddings) {
  if (embeddings.empty()) throw InvalidInput("empty embedding set");
  const std::size_t width = embeddings.front().size();
  std::vector<double> flat;
  flat.reserve(width * embeddings.size());
  for (const auto& e : embeddings) {
    if (e.size() != width) throw ShapeMismatch("modalities must share embedding width");
    flat.insert(flat.end(), e.begin(), e.end());
  }
  return flat;
}

}  // namespace

SynthesizedOutlier synthesize(const OutlierPlan& plan, const EmbeddingSet& embeddings,
                              std::size_t y_true, const SwapConfig& cfg) {
  if (embeddings.size() != plan.modalities) throw ShapeMismatch("synthesize: modality count");
  const auto flat = plan.apply(concatenate(embeddings));
  SynthesizedOutlier out;
  out.embeddings.resize(plan.modalities);
  for (std::size_t k = 0; k < plan.modalities; ++k) {
    const auto first = flat.begin() + static_cast<std::ptrdiff_t>(k * plan.width);
    out.embeddings[k].assign(first, first + static_cast<std::ptrdiff_t>(plan.width));
  }
  out.lambda = plan.lambda;
  out.n_swap = plan.n_swap;
  out.label = soft_label(plan.lambda, y_true, cfg.outlier_class);
  return out;
}

SynthesizedOutlier mfs_two(std::span<const double> e1, std::span<const double> e2,
                           std::size_t y_true, const SwapConfig& cfg, RandomStream& rng) {
  const EmbeddingSet set{{e1.begin(), e1.end()}, {e2.begin(), e2.end()}};
  return mfs_cyclic(set, y_true, cfg, rng);
}

SynthesizedOutlier mfs_cyclic(const EmbeddingSet& embeddings, std::size_t y_true,
                              const SwapConfig& cfg, RandomStream& rng) {
  const std::size_t width = embeddings.empty() ? 0 : embeddings.front().size();
  return synthesize(plan_mfs(embeddings.size(), width, cfg, rng), embeddings, y_true, cfg);
}

SynthesizedOutlier aug_random_noise(const EmbeddingSet& embeddings, std::size_t y_true,
                                    const SwapConfig& cfg, RandomStream& rng) {
  const std::size_t width = embeddings.empty() ? 0 : embeddings.front().size();
  return synthesize(plan_random_noise(embeddings.size(), width, cfg, rng), embeddings, y_true, cfg);
}

SynthesizedOutlier aug_random_drop(const EmbeddingSet& embeddings, std::size_t y_true,
                                   const SwapConfig& cfg, RandomStream& rng) {
  const std::size_t width = embeddings.empty() ? 0 : embeddings.front().size();
  return synthesize(plan_random_drop(embeddings.size(), width, cfg, rng), embeddings, y_true, cfg);
}

SynthesizedOutlier aug_feature_mix(const EmbeddingSet& embeddings, std::size_t y_true,
                                   const SwapConfig& cfg, RandomStream& rng) {
  const std::size_t width = embeddings.empty() ? 0 : embeddings.front().size();
  return synthesize(plan_feature_mix(embeddings.size(), width, cfg, rng), embeddings, y_true, cfg);
}

}  // namespace acr
