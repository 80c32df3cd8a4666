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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prunesearch/metric.hpp"
#include "prunesearch/model.hpp"
#include "prunesearch/tensor.hpp"

namespace prunesearch {

struct Unstructured {
  double ratio = 0.5;  ///< fraction removed per row, in [0, 1]
  bool operator==(const Unstructured&) const = default;
};

/// Keep exactly `n` of every aligned group of `m` consecutive weights.
struct SemiStructured {
  std::size_t n = 2;
  std::size_t m = 4;
  bool operator==(const SemiStructured&) const = default;
};

using SparsitySpec = std::variant<Unstructured, SemiStructured>;

/// Throws Error if the ratio is outside [0, 1] or 0 < n <= m fails.
void validate(const SparsitySpec& spec);

/// "0.5" is unstructured, "2:4" is N:M. Throws Error on anything else.
SparsitySpec parse_sparsity(std::string_view text);
std::string to_string(const SparsitySpec& spec);

/// Fraction of weights removed, 1 - n/m for N:M.
double implied_ratio(const SparsitySpec& spec);

/// Entries dropped per row for an unstructured ratio: floor(ratio * cols).
std::size_t pruned_per_row(double ratio, std::size_t cols);

/// Row-major keep (1) / drop (0) flags.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, std::uint8_t fill = 1)
      : rows(rows), cols(cols), bits(rows * cols, fill) {}

  bool kept(std::size_t i, std::size_t j) const {
    return bits[i * cols + j] != 0;
  }
  std::size_t kept_count() const;

  bool operator==(const Mask&) const = default;
};

/// Sub-module name ("layer.0.q") to mask.
using MaskSet = std::map<std::string, Mask>;

/// Per-feature statistics for every prunable sub-module, keyed by name.
using ActivationStats = std::map<std::string, SubModuleStats>;

/// Keeps the highest scores of each row (unstructured) or of each aligned
/// group of m along a row (N:M). Ties keep the lower column index.
Mask build_mask(const Matrix& scores, const SparsitySpec& spec);

/// Kept entries copied, dropped entries set to exactly 0.
Matrix apply_mask(const Matrix& w, const Mask& mask);

/// Fraction of dropped entries.
double sparsity_of(const Mask& mask);

struct PruneResult {
  ModelWeights weights;
  MaskSet masks;
};

/// Scores and masks each of the 7 * n_layers sub-modules independently and
/// returns a pruned copy. Embeddings, norms and the head are untouched.
PruneResult prune_model(const ModelWeights& weights,
                        const ActivationStats& stats, const MetricKind& kind,
                        const SparsitySpec& spec);

}  // namespace prunesearch
