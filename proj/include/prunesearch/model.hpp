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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/tensor.hpp"

namespace prunesearch {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

struct ModelConfig {
  std::size_t vocab_size = 128;
  std::size_t d_model = 32;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 64;
  std::size_t max_seq_len = 128;

  std::size_t head_dim() const { return d_model / n_heads; }
  /// Throws Error unless every field is >= 1 and d_model % n_heads == 0.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// The seven prunable linear maps of a block, in canonical order.
enum class SubModule : std::uint8_t { q, k, v, o, gate, up, down };

inline constexpr std::size_t kSubModulesPerLayer = 7;
inline constexpr std::array<SubModule, kSubModulesPerLayer> kAllSubModules = {
    SubModule::q,    SubModule::k,  SubModule::v,   SubModule::o,
    SubModule::gate, SubModule::up, SubModule::down};

std::string_view to_string(SubModule sm);
/// "layer.<layer>.<sub-module>", e.g. "layer.0.q".
std::string sub_module_name(std::size_t layer, SubModule sm);

/// Linear weights are stored output x input, so y = x W^T and each row
/// holds the weights feeding one output neuron.
struct LayerWeights {
  Matrix q, k, v, o;  // d_model x d_model
  Matrix gate, up;    // d_ff x d_model
  Matrix down;        // d_model x d_ff
  Vector attn_norm;   // d_model
  Vector mlp_norm;    // d_model

  const Matrix& linear(SubModule sm) const;
  Matrix& linear(SubModule sm);
};

struct ModelWeights {
  ModelConfig config;
  Matrix token_embedding;     // vocab x d_model; also the output head
  Matrix position_embedding;  // max_seq_len x d_model
  std::vector<LayerWeights> layers;
  Vector final_norm;  // d_model

  std::size_t num_prunable() const {
    return layers.size() * kSubModulesPerLayer;
  }
  bool operator==(const ModelWeights&) const;
};

/// Weights drawn i.i.d. from N(0, 0.02^2) with a portable seeded generator;
/// RMSNorm gains start at 1.
ModelWeights init_model(const ModelConfig& config, std::uint64_t seed);

/// Throws Error if shapes disagree with `w.config` or any value is non-finite.
void validate_weights(const ModelWeights& w);

inline constexpr double kRmsNormEps = 1e-6;

/// Row-wise x / sqrt(mean(x^2) + eps) * gain.
Matrix rms_norm(const Matrix& x, const Vector& gain);

/// Scaled causal softmax over attention logits: row t only attends to
/// positions <= t. Masked entries are exactly 0.
Matrix causal_softmax(const Matrix& logits);

double silu(double x);

struct ForwardTrace {
  /// T x d_model, after the final RMSNorm and before the output head.
  Matrix final_hidden;
  /// When captured: the input to every prunable linear map, indexed by
  /// layer * 7 + sub-module.
  std::vector<Matrix> captured_inputs;
  /// When captured: per layer, per head, the T x T attention probabilities.
  std::vector<Matrix> attention_probs;
};

/// Throws Error on out-of-range token ids or over-long sequences.
ForwardTrace forward(const ModelWeights& w, std::span<const TokenId> tokens,
                     bool capture = false);

}  // namespace prunesearch
