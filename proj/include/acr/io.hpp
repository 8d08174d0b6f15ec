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

// File formats: dataset CSV, logit dumps, model checkpoints and small
// CSV/number helpers. Reals are written with 17 significant digits so every
// file round-trips bit-exactly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "acr/model.hpp"
#include "acr/numerics.hpp"
#include "acr/synth.hpp"

namespace acr {

std::string format_real(double value);
double parse_real(std::string_view text);
long long parse_integer(std::string_view text);
std::vector<std::string_view> split_csv_line(std::string_view line);

// Writes one file per modality, `<prefix>_m<k>.csv`, with header
// sample_id,label,flag,f0..f{d_in-1}.
void write_dataset_csv(const MultimodalBatch& batch, const std::filesystem::path& prefix);
MultimodalBatch read_dataset_csv(const std::filesystem::path& prefix, std::size_t modalities);

// Columns: sample_id,label,ood_flag,fused_logit_0..fused_logit_C then,
// optionally, uni<k>_logit_0..uni<k>_logit_{C-1} for each modality k.
// OOD rows carry label -1.
struct LogitDump {
  std::size_t num_classes = 0;
  std::vector<std::int64_t> sample_ids;
  std::vector<int> labels;
  std::vector<bool> ood;
  Matrix fused;             // n x (C + 1)
  std::vector<Matrix> uni;  // per modality n x C; empty when absent

  std::size_t size() const noexcept { return labels.size(); }
};

LogitDump make_logit_dump(const ForwardRecord& record, std::span<const int> labels);
void write_logit_dump(const LogitDump& dump, std::ostream& os);
void write_logit_dump(const LogitDump& dump, const std::filesystem::path& path);
LogitDump read_logit_dump(std::istream& is);
LogitDump read_logit_dump(const std::filesystem::path& path);

// Text checkpoint:
//   acr-checkpoint 1
//   shape <modalities> <input_dim> <embed_dim> <num_classes>
//   tensor <name> <rows> <cols>
//   <rows lines of cols space-separated reals>
//   ... one block per tensor in ModelParams order ...
//   end
void write_checkpoint(const ModelParams& params, std::ostream& os);
void write_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams read_checkpoint(std::istream& is);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace acr
