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

// Synthetic multimodal benchmark with controllable cross-modal conflict and
// uninformative (pure-noise) modalities.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acr/numerics.hpp"

namespace acr {

enum class SampleFlag : std::uint8_t { Clean, Conflict, Noisy };

std::string flag_name(SampleFlag flag);
SampleFlag parse_flag(std::string_view name);

struct MultimodalBatch {
  std::vector<Matrix> inputs;  // one (n x d_in) matrix per modality
  std::vector<int> labels;
  std::vector<SampleFlag> flags;
  std::vector<int> corrupted_modality;  // -1 for clean samples

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t modalities() const noexcept { return inputs.size(); }
  MultimodalBatch subset(std::span<const std::size_t> rows) const;
  bool operator==(const MultimodalBatch&) const = default;
};

struct SynthConfig {
  std::size_t num_classes = 6;
  std::size_t modalities = 2;
  std::size_t input_dim = 16;
  std::size_t n_train = 2000;
  std::size_t n_val = 500;
  std::size_t n_test = 1000;
  double sigma = 1.2;
  double rho_conflict = 0.25;
  double rho_noise = 0.1;
  // Scale of the pure-noise replacement used for noisy samples.
  double sigma_noise = 5.0;
  // Modality that carries the wrong-class prototype in conflict samples.
  std::size_t conflict_modality = 1;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

struct SyntheticDataset {
  std::vector<Matrix> prototypes;  // per modality, (C x d_in)
  MultimodalBatch train;
  MultimodalBatch val;
  MultimodalBatch test;
};

SyntheticDataset make_dataset(const SynthConfig& cfg);

// Adds sigma_shift * N(0, 1) to every input of one modality.
MultimodalBatch apply_shift(const MultimodalBatch& batch, std::size_t modality, double sigma_shift,
                            RandomStream& rng);

}  // namespace acr
