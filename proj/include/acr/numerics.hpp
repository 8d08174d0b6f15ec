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

// Dense double-precision kernel shared by the rest of the library:
// a row-major matrix, stable softmax / log-sum-exp, soft-target
// cross-entropy, Adam, and a counter-based random stream with labeled forks.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace acr {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;
  void fill(double value);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// out = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// out = a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// out = a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// Adds `bias` (1 x cols) to every row of `m`.
void add_row_bias(Matrix& m, const Matrix& bias);
// 1 x cols matrix of column sums.
Matrix column_sums(const Matrix& m);

std::vector<double> softmax(std::span<const double> v);
double logsumexp(std::span<const double> v);
// -sum_i target_i * log(probs_i).
double cross_entropy_soft(std::span<const double> probs, std::span<const double> target);

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;

  static AdamState for_params(std::span<const Matrix> params, AdamHyper hyper = {});
};

// Bias-corrected Adam update applied in place; increments state.t by one.
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state);

// Counter-based generator: output i is a keyed hash of i, so a stream is
// fully described by (key, counter). fork() derives a child key from a
// label without advancing the parent. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  RandomStream fork(std::string_view label) const;
  RandomStream fork(std::uint64_t index) const;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  bool operator==(const RandomStream&) const = default;

 private:
  RandomStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

// Uniform integer in [lo, hi], both inclusive.
std::int64_t rng_uniform_int(RandomStream& rng, std::int64_t lo, std::int64_t hi);
// Uniform real in [0, 1).
double rng_uniform01(RandomStream& rng);
// Standard normal draw.
double rng_normal(RandomStream& rng);
// Uniformly shuffled 0..n-1.
std::vector<std::size_t> rng_permutation(RandomStream& rng, std::size_t n);

}  // namespace acr
