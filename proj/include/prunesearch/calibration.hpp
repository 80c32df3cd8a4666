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
#include <optional>
#include <vector>

#include "prunesearch/model.hpp"

namespace prunesearch {

/// Token sequences used to estimate activation statistics and divergence.
struct CalibrationSet {
  std::vector<TokenSequence> sequences;
  /// Seed of the generator that produced the set, when synthetic.
  std::optional<std::uint64_t> seed;

  std::size_t token_count() const;
  /// Throws Error if empty, if any sequence is empty, or if any sequence
  /// violates the model's vocab/length limits.
  void validate(const ModelConfig& config) const;
};

/// `num_sequences` sequences of `length` token ids drawn uniformly from
/// [0, vocab_size).
CalibrationSet make_synthetic_calibration(std::size_t vocab_size,
                                          std::size_t num_sequences,
                                          std::size_t length,
                                          std::uint64_t seed);

/// Final hidden states of every calibration sequence, in input order.
std::vector<Matrix> final_hidden_batch(const ModelWeights& w,
                                       const CalibrationSet& calib);

}  // namespace prunesearch
