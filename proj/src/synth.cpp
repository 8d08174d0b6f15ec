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

#include "acr/synth.hpp"

#include <cmath>

#include "acr/error.hpp"

namespace acr {

std::string flag_name(SampleFlag flag) {
  switch (flag) {
    case SampleFlag::Clean: return "clean";
    case SampleFlag::Conflict: return "conflict";
    case SampleFlag::Noisy: return "noisy";
  }
  return "unknown";
}

SampleFlag parse_flag(std::string_view name) {
  if (name == "clean") return SampleFlag::Clean;
  if (name == "conflict") return SampleFlag::Conflict;
  if (name == "noisy") return SampleFlag::Noisy;
  throw InvalidInput("unknown sample flag '" + std::string(name) + "'");
}

MultimodalBatch MultimodalBatch::subset(std::span<const std::size_t> rows) const {
  MultimodalBatch out;
  for (const auto& x : inputs) {
    Matrix m(rows.size(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = x.row(rows[i]);
      std::copy(src.begin(), src.end(), m.row(i).begin());
    }
    out.inputs.push_back(std::move(m));
  }
  for (std::size_t r : rows) {
    out.labels.push_back(labels[r]);
    out.flags.push_back(flags[r]);
    out.corrupted_modality.push_back(corrupted_modality[r]);
  }
  return out;
}

void validate(const SynthConfig& cfg) {
  if (cfg.num_classes < 2) throw InvalidConfig("synth: need at least two classes");
  if (cfg.modalities < 2) throw InvalidConfig("synth: need at least two modalities");
  if (cfg.input_dim < 1) throw InvalidConfig("synth: input_dim must be >= 1");
  if (cfg.n_train < 1 || cfg.n_val < 1 || cfg.n_test < 1) {
    throw InvalidConfig("synth: split sizes must be >= 1");
  }
  if (!(cfg.sigma >= 0.0) || !(cfg.sigma_noise >= 0.0)) throw InvalidConfig("synth: negative noise scale");
  if (!(cfg.rho_conflict >= 0.0 && cfg.rho_conflict < 1.0) ||
      !(cfg.rho_noise >= 0.0 && cfg.rho_noise < 1.0) || !(cfg.rho_conflict + cfg.rho_noise < 1.0)) {
    throw InvalidConfig("synth: fractions must satisfy 0 <= rho_conflict, rho_noise and sum < 1");
  }
  if (cfg.conflict_modality >= cfg.modalities) throw InvalidConfig("synth: conflict_modality out of range");
}

namespace {

MultimodalBatch make_split(const SynthConfig& cfg, const std::vector<Matrix>& prototypes,
                           std::size_t n, RandomStream rng) {
  auto label_rng = rng.fork("labels");
  auto flag_rng = rng.fork("flags");
  auto sample_rng = rng.fork("samples");

  MultimodalBatch batch;
  const auto label_perm = rng_permutation(label_rng, n);
  batch.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.labels[label_perm[i]] = static_cast<int>(i % cfg.num_classes);
  }

  const auto n_conflict = static_cast<std::size_t>(std::llround(cfg.rho_conflict * static_cast<double>(n)));
  const auto n_noisy = static_cast<std::size_t>(std::llround(cfg.rho_noise * static_cast<double>(n)));
  const auto flag_perm = rng_permutation(flag_rng, n);
  batch.flags.assign(n, SampleFlag::Clean);
  for (std::size_t i = 0; i < n_conflict && i < n; ++i) batch.flags[flag_perm[i]] = SampleFlag::Conflict;
  for (std::size_t i = n_conflict; i < n_conflict + n_noisy && i < n; ++i) {
    batch.flags[flag_perm[i]] = SampleFlag::Noisy;
  }

  batch.inputs.assign(cfg.modalities, Matrix(n, cfg.input_dim));
  batch.corrupted_modality.assign(n, -1);
  const auto last_class = static_cast<std::int64_t>(cfg.num_classes) - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    std::vector<std::size_t> source(cfg.modalities, y);
    std::size_t noisy_modality = cfg.modalities;
    if (batch.flags[i] == SampleFlag::Conflict) {
      // Uniform over the C - 1 classes other than y.
      auto other = static_cast<std::size_t>(rng_uniform_int(sample_rng, 0, last_class - 1));
      if (other >= y) ++other;
      source[cfg.conflict_modality] = other;
      batch.corrupted_modality[i] = static_cast<int>(cfg.conflict_modality);
    } else if (batch.flags[i] == SampleFlag::Noisy) {
      noisy_modality = static_cast<std::size_t>(
          rng_uniform_int(sample_rng, 0, static_cast<std::int64_t>(cfg.modalities) - 1));
      batch.corrupted_modality[i] = static_cast<int>(noisy_modality);
    }
    for (std::size_t k = 0; k < cfg.modalities; ++k) {
      auto row = batch.inputs[k].row(i);
      if (k == noisy_modality) {
        for (double& v : row) v = cfg.sigma_noise * rng_normal(sample_rng);
      } else {
        auto mu = prototypes[k].row(source[k]);
        for (std::size_t d = 0; d < row.size(); ++d) row[d] = mu[d] + cfg.sigma * rng_normal(sample_rng);
      }
    }
  }
  return batch;
}

}  // namespace

SyntheticDataset make_dataset(const SynthConfig& cfg) {
  validate(cfg);
  const RandomStream root(cfg.seed);
  SyntheticDataset data;
  auto proto_rng = root.fork("prototypes");
  for (std::size_t k = 0; k < cfg.modalities; ++k) {
    Matrix mu(cfg.num_classes, cfg.input_dim);
    for (double& v : mu.values()) v = rng_normal(proto_rng);
    data.prototypes.push_back(std::move(mu));
  }
  data.train = make_split(cfg, data.prototypes, cfg.n_train, root.fork("train"));
  data.val = make_split(cfg, data.prototypes, cfg.n_val, root.fork("val"));
  data.test = make_split(cfg, data.prototypes, cfg.n_test, root.fork("test"));
  return data;
}

MultimodalBatch apply_shift(const MultimodalBatch& batch, std::size_t modality, double sigma_shift,
                            RandomStream& rng) {
  if (modality >= batch.modalities()) throw InvalidInput("apply_shift: modality index out of range");
  if (!(sigma_shift >= 0.0)) throw InvalidInput("apply_shift: sigma_shift must be >= 0");
  MultimodalBatch out = batch;
  if (sigma_shift == 0.0) return out;
  for (double& v : out.inputs[modality].values()) v += sigma_shift * rng_normal(rng);
  return out;
}

}  // namespace acr
