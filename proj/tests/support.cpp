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


#include "support.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "prunesearch/io.hpp"

namespace prunesearch::testing {

ModelConfig fixture_config() {
  ModelConfig c;
  c.vocab_size = 128;
  c.d_model = 32;
  c.n_layers = 2;
  c.n_heads = 4;
  c.d_ff = 64;
  c.max_seq_len = 128;
  return c;
}

const ModelWeights& fixture_model() {
  static const ModelWeights w =
      decode_model(encode_model(init_model(fixture_config(), 42)));
  return w;
}

const CalibrationSet& fixture_calib() {
  static const CalibrationSet c = make_synthetic_calibration(128, 8, 64, 7);
  return c;
}

const ActivationStats& fixture_stats() {
  static const ActivationStats s =
      collect_activation_stats(fixture_model(), fixture_calib());
  return s;
}

const EvalContext& fixture_context() {
  static const EvalContext ctx =
      EvalContext::build(fixture_model(), fixture_calib(), Unstructured{0.5});
  return ctx;
}

ModelWeights tiny_model(std::uint64_t seed) {
  ModelConfig c;
  c.vocab_size = 16;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.max_seq_len = 16;
  return init_model(c, seed);
}

CalibrationSet tiny_calib(std::uint64_t seed) {
  return make_synthetic_calibration(16, 3, 6, seed);
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo,
                     double hi) {
  Matrix m(rows, cols);
  for (double& x : m.values()) x = lo + (hi - lo) * uniform01(rng);
  return m;
}

std::vector<std::uint8_t> rank_count_keep(const std::vector<double>& row,
                                          std::size_t keep) {
  std::vector<std::uint8_t> out(row.size(), 0);
  for (std::size_t j = 0; j < row.size(); ++j) {
    std::size_t better = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] > row[j] || (row[k] == row[j] && k < j)) ++better;
    }
    out[j] = better < keep ? 1 : 0;
  }
  return out;
}

namespace {

Mask mask_from_scores(const std::vector<std::vector<double>>& scores,
                      double ratio) {
  const std::size_t rows = scores.size();
  const std::size_t cols = scores[0].size();
  const std::size_t keep =
      cols - static_cast<std::size_t>(std::floor(ratio * static_cast<double>(cols)));
  Mask mask(rows, cols, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto bits = rank_count_keep(scores[i], keep);
    for (std::size_t j = 0; j < cols; ++j) mask.bits[i * cols + j] = bits[j];
  }
  return mask;
}

}  // namespace

Mask wanda_reference_mask(const Matrix& w, const std::vector<double>& v,
                          double ratio) {
  std::vector<std::vector<double>> s(w.rows(), std::vector<double>(w.cols()));
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) s[i][j] = std::fabs(w(i, j)) * v[j];
  }
  return mask_from_scores(s, ratio);
}

Mask ria_reference_mask(const Matrix& w, const std::vector<double>& v,
                        double ratio) {
  std::vector<double> row_sum(w.rows(), 0.0), col_sum(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      row_sum[i] += std::fabs(w(i, j));
      col_sum[j] += std::fabs(w(i, j));
    }
  }
  std::vector<std::vector<double>> s(w.rows(), std::vector<double>(w.cols()));
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double a = std::fabs(w(i, j));
      s[i][j] = (a / row_sum[i] + a / col_sum[j]) * std::sqrt(v[j]);
    }
  }
  return mask_from_scores(s, ratio);
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("prunesearch-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace prunesearch::testing
