// Copyright 2026 The semsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace semsum {

/// Dense row-major matrix of doubles, rank <= 2. A row vector is 1xN and a
/// scalar is 1x1. All model arithmetic runs in 64-bit precision.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c, double fill_value = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill_value) {
    if (r < 0 || c < 0) {
      throw std::invalid_argument("matrix dimensions must be non-negative");
    }
  }

  static Matrix zeros(int r, int c) { return Matrix(r, c, 0.0); }

  static Matrix scalar_of(double x) {
    Matrix m(1, 1);
    m.v[0] = x;
    return m;
  }

  static Matrix row_of(std::initializer_list<double> xs) {
    Matrix m(1, static_cast<int>(xs.size()));
    std::copy(xs.begin(), xs.end(), m.v.begin());
    return m;
  }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }

  double scalar() const {
    if (!is_scalar()) {
      throw std::invalid_argument("matrix is not a 1x1 scalar");
    }
    return v[0];
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline Matrix uniform_matrix(int r, int c, double lo, double hi, std::mt19937_64& rng) {
  Matrix m(r, c);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& x : m.v) x = dist(rng);
  return m;
}

}  // namespace semsum
