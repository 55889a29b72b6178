/*
 * Copyright 2026 The Flowgate Authors.
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

#ifndef FLOWGATE_COMMON_H_
#define FLOWGATE_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowgate {

// All library failures (bad input, violated preconditions, I/O) surface as
// this exception type. Callers that need to continue past a failure (the
// experiment runner) catch it per cell.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;

  // Rows gathered in the order given.
  Matrix select_rows(std::span<const std::size_t> rows) const;
  // Columns gathered in the order given.
  Matrix select_cols(std::span<const std::size_t> cols) const;

  void append_row(std::span<const double> values);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Seed mixing so that independent streams (per class, per tree, per fold) can
// be derived from one user seed.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic generator. The standard distributions are
// implementation-defined, so bounded integers and normals are derived here
// from raw mt19937_64 output to keep results identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);
  // Uniform double in [0, 1).
  double uniform01();
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once; callers write results into pre-sized slots so the
// output does not depend on scheduling.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body);

// Largest-remainder apportionment of `total` over `weights` (which need not
// be normalized). Ties in the fractional part go to the lower index.
std::vector<std::size_t> apportion(std::size_t total,
                                   std::span<const double> weights);

// floor(x) that tolerates binary representation error just below an integer
// (0.29 * 100 == 28.999999999999996).
std::size_t guarded_floor(double x);

double wall_seconds();

}  // namespace flowgate

#endif  // FLOWGATE_COMMON_H_
