// Copyright (c) 2026 The prunesearch Authors. All Rights Reserved.
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

#include "prunesearch/tensor.hpp"

#include <cmath>
#include <string>

#include "prunesearch/error.hpp"

namespace prunesearch {

bool all_finite(std::span<const double> values) {
  for (double x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vector::Vector(std::size_t len, double fill) : data_(len, fill) {
  if (!std::isfinite(fill)) throw Error("Vector: non-finite fill value");
}

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
  if (!all_finite(data_)) throw Error("Vector: non-finite entry");
}

Vector::Vector(std::initializer_list<double> values)
    : Vector(std::vector<double>(values)) {}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw Error("Matrix: zero dimension");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw Error("Matrix: zero dimension");
  if (data_.size() != rows * cols) {
    throw Error("Matrix: data length " + std::to_string(data_.size()) +
                " does not match " + std::to_string(rows) + "x" +
                std::to_string(cols));
  }
  if (!all_finite(data_)) throw Error("Matrix: non-finite entry");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  if (rows_ == 0 || cols_ == 0) throw Error("Matrix: zero dimension");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite(data_)) throw Error("Matrix: non-finite entry");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error("matmul: dimension mismatch " + std::to_string(a.rows()) +
                "x" + std::to_string(a.cols()) + " * " +
                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error("matmul_transposed: inner dimension mismatch " +
                std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto x = a.row(i);
    for (std::size_t o = 0; o < b.rows(); ++o) {
      auto w = b.row(o);
      double acc = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * w[k];
      out(i, o) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix abs(const Matrix& a) {
  Matrix out = a;
  for (double& x : out.values()) x = std::fabs(x);
  return out;
}

Vector abs_row_sums(const Matrix& a) {
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (double x : a.row(i)) acc += std::fabs(x);
    out[i] = acc;
  }
  return out;
}

Vector abs_col_sums(const Matrix& a) {
  Vector out(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += std::fabs(r[j]);
  }
  return out;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.values()) acc += x * x;
  return std::sqrt(acc);
}

double l2_norm(const Vector& v) {
  double acc = 0.0;
  for (double x : v.values()) acc += x * x;
  return std::sqrt(acc);
}

double sum(const Vector& v) {
  double acc = 0.0;
  for (double x : v.values()) acc += x;
  return acc;
}

double abs_sum(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.values()) acc += std::fabs(x);
  return acc;
}

}  // namespace prunesearch
