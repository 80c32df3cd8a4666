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


// Shared fixtures and independent reference implementations for tests.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prunesearch/calibration.hpp"
#include "prunesearch/model.hpp"
#include "prunesearch/objective.hpp"
#include "prunesearch/prune.hpp"
#include "prunesearch/rng.hpp"
#include "prunesearch/tensor.hpp"

namespace prunesearch::testing {

// The frozen fixture: 2 layers, d_model 32, 4 heads, d_ff 64, vocab 128,
// weight seed 42; 8 calibration sequences of 64 tokens, seed 7.
ModelConfig fixture_config();
// Seeded weights passed through the on-disk float32 encoding, so the values
// equal what the command line tool reads back.
const ModelWeights& fixture_model();
const CalibrationSet& fixture_calib();
const ActivationStats& fixture_stats();
// Unstructured 0.5 evaluation context, built once.
const EvalContext& fixture_context();

// A small model for fast tests.
ModelWeights tiny_model(std::uint64_t seed = 3);
CalibrationSet tiny_calib(std::uint64_t seed = 5);

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                     double lo = 0.0, double hi = 1.0);

// Keeps the `keep` best entries of `row` by counting, for every entry, how
// many entries outrank it (higher score, or equal score at a lower index).
std::vector<std::uint8_t> rank_count_keep(const std::vector<double>& row,
                                          std::size_t keep);

// Mask for |W_ij| * v_j computed directly, per-row ratio pruning.
Mask wanda_reference_mask(const Matrix& w, const std::vector<double>& v,
                          double ratio);
// Mask for (|W_ij| / row_sum_i + |W_ij| / col_sum_j) * sqrt(v_j).
Mask ria_reference_mask(const Matrix& w, const std::vector<double>& v,
                        double ratio);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);

}  // namespace prunesearch::testing
