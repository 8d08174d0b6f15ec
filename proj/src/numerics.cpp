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

#include "acr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "acr/error.hpp"

namespace acr {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeMismatch("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto src = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeMismatch("matmul_tn: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt: column counts differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < arow.size(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

void add_row_bias(Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) throw ShapeMismatch("add_row_bias: bias shape");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out(0, j) += r[j];
  }
  return out;
}

namespace {

void require_finite(std::span<const double> v, const char* who) {
  if (v.empty()) throw InvalidInput(std::string(who) + ": empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(who) + ": non-finite entry");
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> v) {
  require_finite(v, "softmax");
  const double peak = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

double logsumexp(std::span<const double> v) {
  require_finite(v, "logsumexp");
  const double peak = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - peak);
  return peak + std::log(total);
}

double cross_entropy_soft(std::span<const double> probs, std::span<const double> target) {
  if (probs.size() != target.size()) throw ShapeMismatch("cross_entropy_soft: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (target[i] == 0.0) continue;
    if (!(probs[i] > 0.0)) throw InvalidInput("cross_entropy_soft: zero probability on target mass");
    loss -= target[i] * std::log(probs[i]);
  }
  return loss;
}

AdamState AdamState::for_params(std::span<const Matrix> params, AdamHyper hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const auto& p : params) {
    state.m.emplace_back(p.rows(), p.cols());
    state.v.emplace_back(p.rows(), p.cols());
  }
  return state;
}

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeMismatch("adam_step: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.m[i])) {
      throw ShapeMismatch("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }
  const auto& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values();
    auto g = grads[i].values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(mix64(seed + kGolden)), counter_(0) {}

RandomStream::result_type RandomStream::operator()() {
  const std::uint64_t c = counter_++;
  return mix64(mix64(c * kGolden + key_) ^ rotl(key_, 29));
}

RandomStream RandomStream::fork(std::string_view label) const {
  return RandomStream(mix64(key_ ^ mix64(fnv1a(label))), 0);
}

RandomStream RandomStream::fork(std::uint64_t index) const {
  return RandomStream(mix64(rotl(key_, 17) ^ mix64(index + kGolden)), 0);
}

std::int64_t rng_uniform_int(RandomStream& rng, std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw InvalidInput("rng_uniform_int: lo > hi");
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(rng);
}

double rng_uniform01(RandomStream& rng) {
  // 53 high bits mapped onto [0, 1).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double rng_normal(RandomStream& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

std::vector<std::size_t> rng_permutation(RandomStream& rng, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace acr
