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

#include "acr/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "acr/error.hpp"

namespace acr {

std::string format_real(double value) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidInput("cannot parse real '" + std::string(text) + "'");
  }
  return value;
}

long long parse_integer(std::string_view text) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw InvalidInput("cannot parse integer '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open '" + path.string() + "'");
  return is;
}

std::filesystem::path modality_file(const std::filesystem::path& prefix, std::size_t k) {
  return prefix.string() + "_m" + std::to_string(k) + ".csv";
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw InvalidInput("line " + std::to_string(line) + ": " + what);
}

}  // namespace

void write_dataset_csv(const MultimodalBatch& batch, const std::filesystem::path& prefix) {
  for (std::size_t k = 0; k < batch.modalities(); ++k) {
    auto os = open_out(modality_file(prefix, k));
    const auto& x = batch.inputs[k];
    // `corrupted` marks the modality that carries the conflict or noise.
    os << "sample_id,label,flag,corrupted";
    for (std::size_t d = 0; d < x.cols(); ++d) os << ",f" << d;
    os << '\n';
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const bool corrupted = batch.corrupted_modality[i] == static_cast<int>(k);
      os << i << ',' << batch.labels[i] << ',' << flag_name(batch.flags[i]) << ',' << (corrupted ? 1 : 0);
      for (double v : x.row(i)) os << ',' << format_real(v);
      os << '\n';
    }
  }
}

MultimodalBatch read_dataset_csv(const std::filesystem::path& prefix, std::size_t modalities) {
  MultimodalBatch batch;
  for (std::size_t k = 0; k < modalities; ++k) {
    auto is = open_in(modality_file(prefix, k));
    std::string line;
    if (!std::getline(is, line)) fail_line(1, "missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "sample_id" || header[1] != "label" || header[2] != "flag" ||
        header[3] != "corrupted") {
      fail_line(1, "expected header sample_id,label,flag,corrupted,f0..");
    }
    const std::size_t dim = header.size() - 4;
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<SampleFlag> flags;
    std::vector<bool> corrupted;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != header.size()) fail_line(line_no, "expected " + std::to_string(header.size()) + " fields");
      labels.push_back(static_cast<int>(parse_integer(f[1])));
      flags.push_back(parse_flag(f[2]));
      const auto mark = parse_integer(f[3]);
      if (mark != 0 && mark != 1) fail_line(line_no, "corrupted must be 0 or 1");
      corrupted.push_back(mark == 1);
      for (std::size_t d = 0; d < dim; ++d) values.push_back(parse_real(f[4 + d]));
    }
    Matrix x(labels.size(), dim);
    std::copy(values.begin(), values.end(), x.values().begin());
    if (k == 0) {
      batch.labels = std::move(labels);
      batch.flags = std::move(flags);
      batch.corrupted_modality.assign(batch.labels.size(), -1);
    } else if (labels != batch.labels) {
      throw InvalidInput("dataset modality files disagree on labels");
    }
    for (std::size_t i = 0; i < corrupted.size(); ++i) {
      if (corrupted[i]) batch.corrupted_modality[i] = static_cast<int>(k);
    }
    batch.inputs.push_back(std::move(x));
  }
  return batch;
}

LogitDump make_logit_dump(const ForwardRecord& record, std::span<const int> labels) {
  if (labels.size() != record.size()) throw ShapeMismatch("make_logit_dump: label count");
  LogitDump dump;
  dump.num_classes = record.fused_logits.cols() - 1;
  dump.labels.assign(labels.begin(), labels.end());
  dump.ood.assign(labels.size(), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    dump.sample_ids.push_back(static_cast<std::int64_t>(i));
    if (labels[i] < 0) dump.ood[i] = true;
  }
  dump.fused = record.fused_logits;
  dump.uni = record.uni_logits;
  return dump;
}

void write_logit_dump(const LogitDump& dump, std::ostream& os) {
  const std::size_t C = dump.num_classes;
  os << "sample_id,label,ood_flag";
  for (std::size_t j = 0; j <= C; ++j) os << ",fused_logit_" << j;
  for (std::size_t k = 0; k < dump.uni.size(); ++k) {
    for (std::size_t j = 0; j < C; ++j) os << ",uni" << k << "_logit_" << j;
  }
  os << '\n';
  for (std::size_t i = 0; i < dump.size(); ++i) {
    os << dump.sample_ids[i] << ',' << dump.labels[i] << ',' << (dump.ood[i] ? 1 : 0);
    for (double v : dump.fused.row(i)) os << ',' << format_real(v);
    for (const auto& u : dump.uni) {
      for (double v : u.row(i)) os << ',' << format_real(v);
    }
    os << '\n';
  }
}

void write_logit_dump(const LogitDump& dump, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_logit_dump(dump, os);
}

LogitDump read_logit_dump(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail_line(1, "missing header");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "sample_id" || header[1] != "label" || header[2] != "ood_flag") {
    fail_line(1, "expected header sample_id,label,ood_flag,fused_logit_0..");
  }
  std::size_t fused_cols = 0;
  while (3 + fused_cols < header.size() &&
         header[3 + fused_cols] == "fused_logit_" + std::to_string(fused_cols)) {
    ++fused_cols;
  }
  if (fused_cols < 2) fail_line(1, "need at least two fused_logit columns (C classes + outlier)");
  LogitDump dump;
  dump.num_classes = fused_cols - 1;
  const std::size_t C = dump.num_classes;
  const std::size_t rest = header.size() - 3 - fused_cols;
  if (rest % C != 0) fail_line(1, "unimodal logit columns must come in groups of C");
  const std::size_t modalities = rest / C;
  for (std::size_t k = 0; k < modalities; ++k) {
    for (std::size_t j = 0; j < C; ++j) {
      const auto expected = "uni" + std::to_string(k) + "_logit_" + std::to_string(j);
      if (header[3 + fused_cols + k * C + j] != expected) fail_line(1, "expected column " + expected);
    }
  }
  std::vector<double> fused;
  std::vector<std::vector<double>> uni(modalities);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      fail_line(line_no, "ragged row: expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
    }
    try {
      dump.sample_ids.push_back(parse_integer(f[0]));
      const auto label = parse_integer(f[1]);
      const auto ood = parse_integer(f[2]);
      if (ood != 0 && ood != 1) fail_line(line_no, "ood_flag must be 0 or 1");
      if (ood == 1 ? label != -1 && (label < 0 || label >= static_cast<long long>(C))
                   : label < 0 || label >= static_cast<long long>(C)) {
        fail_line(line_no, "label out of range");
      }
      dump.labels.push_back(static_cast<int>(label));
      dump.ood.push_back(ood == 1);
      for (std::size_t j = 0; j < fused_cols; ++j) fused.push_back(parse_real(f[3 + j]));
      for (std::size_t k = 0; k < modalities; ++k) {
        for (std::size_t j = 0; j < C; ++j) uni[k].push_back(parse_real(f[3 + fused_cols + k * C + j]));
      }
    } catch (const InvalidInput& e) {
      const std::string what = e.what();
      if (what.rfind("line ", 0) == 0) throw;
      fail_line(line_no, what);
    }
  }
  dump.fused = Matrix(dump.size(), fused_cols);
  std::copy(fused.begin(), fused.end(), dump.fused.values().begin());
  for (std::size_t k = 0; k < modalities; ++k) {
    Matrix m(dump.size(), C);
    std::copy(uni[k].begin(), uni[k].end(), m.values().begin());
    dump.uni.push_back(std::move(m));
  }
  return dump;
}

LogitDump read_logit_dump(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_logit_dump(is);
}

void write_checkpoint(const ModelParams& params, std::ostream& os) {
  const auto& s = params.shape();
  os << "acr-checkpoint 1\n";
  os << "shape " << s.modalities << ' ' << s.input_dim << ' ' << s.embed_dim << ' ' << s.num_classes << '\n';
  const auto names = params.tensor_names();
  for (std::size_t t = 0; t < names.size(); ++t) {
    const auto& m = params.tensors()[t];
    os << "tensor " << names[t] << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) os << (j ? " " : "") << format_real(r[j]);
      os << '\n';
    }
  }
  os << "end\n";
}

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_checkpoint(params, os);
}

ModelParams read_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "acr-checkpoint") throw InvalidInput("not an acr checkpoint");
  if (version != 1) throw InvalidInput("unsupported checkpoint version " + std::to_string(version));
  std::string tag;
  ModelShape shape;
  if (!(is >> tag >> shape.modalities >> shape.input_dim >> shape.embed_dim >> shape.num_classes) ||
      tag != "shape") {
    throw InvalidInput("checkpoint: malformed shape line");
  }
  ModelParams params = ModelParams::zeros(shape);
  const auto names = params.tensor_names();
  for (std::size_t t = 0; t < names.size(); ++t) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(is >> tag >> name >> rows >> cols) || tag != "tensor") {
      throw InvalidInput("checkpoint: malformed tensor header");
    }
    auto& m = params.tensors()[t];
    if (name != names[t] || rows != m.rows() || cols != m.cols()) {
      throw InvalidInput("checkpoint: unexpected tensor " + name);
    }
    std::string token;
    for (double& v : m.values()) {
      if (!(is >> token)) throw InvalidInput("checkpoint: truncated tensor " + name);
      v = parse_real(token);
    }
  }
  if (!(is >> tag) || tag != "end") throw InvalidInput("checkpoint: missing end marker");
  return params;
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_checkpoint(is);
}

}  // namespace acr
