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

// The meta pruning metric
//
//   S_ij = [alpha(|W|)_ij * F1(|W|)_ij] * [beta(v)_j * F2(v)_j]
//
// where W is an output x input weight matrix and v_j is the L2 norm of
// input feature j over all calibration tokens. alpha/beta pick one of seven
// normalizing coefficients and F1/F2 one of seven transformations, giving a
// discrete space of 7^4 = 2401 metrics.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "prunesearch/tensor.hpp"

namespace prunesearch {

/// Stable integer codes 0..6; never reorder.
enum class CoeffId : std::uint8_t {
  Uniform = 0,
  GlobalSum = 1,
  Frobenius = 2,
  GlobalMean = 3,
  RowWise = 4,
  ColWise = 5,
  Relative = 6,
};

/// Stable integer codes 0..6; never reorder.
enum class TransformId : std::uint8_t {
  Identity = 0,
  Square = 1,
  Sqrt = 2,
  Log1p = 3,
  ExpNeg = 4,
  Sigmoid = 5,
  Softmax = 6,
};

inline constexpr std::size_t kNumCoeffs = 7;
inline constexpr std::size_t kNumTransforms = 7;
inline constexpr std::size_t kMetricSpaceSize =
    kNumCoeffs * kNumCoeffs * kNumTransforms * kNumTransforms;

inline constexpr double kDenominatorEps = 1e-12;

std::string_view to_string(CoeffId id);
std::string_view to_string(TransformId id);
/// Accepts a canonical name ("global_sum") or the integer code ("1").
std::optional<CoeffId> parse_coeff(std::string_view text);
std::optional<TransformId> parse_transform(std::string_view text);

struct MetricConfig {
  CoeffId alpha = CoeffId::Uniform;
  CoeffId beta = CoeffId::Uniform;
  TransformId f1 = TransformId::Identity;
  TransformId f2 = TransformId::Identity;

  /// Position in the 2401-config space: ((alpha*7 + beta)*7 + f1)*7 + f2.
  std::size_t index() const;
  static MetricConfig from_index(std::size_t index);

  /// "alpha,beta,f1,f2" with canonical names.
  std::string to_string() const;

  bool operator==(const MetricConfig&) const = default;
  auto operator<=>(const MetricConfig&) const = default;
};

/// |W_ij| alone; activation statistics are ignored.
struct MagnitudeMetric {
  bool operator==(const MagnitudeMetric&) const = default;
};

using MetricKind = std::variant<MagnitudeMetric, MetricConfig>;

std::string describe(const MetricKind& kind);

/// Per-feature activation statistics of one prunable linear map.
struct SubModuleStats {
  Vector l2;  ///< v_j = ||X_j||_2 over all calibration tokens
  Vector l1;  ///< sum_t |X_tj|
  std::uint64_t token_count = 0;

  bool operator==(const SubModuleStats&) const = default;
};

/// alpha(|W|) as a full matrix of per-element coefficients.
Matrix weight_coefficient(const Matrix& w, CoeffId id);
/// beta(v) as a per-feature vector.
Vector activation_coefficient(const SubModuleStats& stats, CoeffId id);

/// F1(|W|). Softmax normalizes over the output index i within each column.
Matrix transform_weights(const Matrix& w, TransformId id);
/// F2(v). Softmax normalizes over the feature index j. Expects v >= 0.
Vector transform_activations(const Vector& v, TransformId id);

/// alpha(|W|) * F1(|W|).
Matrix weight_component(const Matrix& w, CoeffId alpha, TransformId f1);
/// beta(v) * F2(v).
Vector activation_component(const SubModuleStats& stats, CoeffId beta,
                            TransformId f2);

/// Importance scores; throws Error unless stats cover w.cols() features.
Matrix score(const Matrix& w, const SubModuleStats& stats,
             const MetricKind& kind);

inline constexpr std::array<std::string_view, 5> kPresetNames = {
    "magnitude", "wanda", "ria", "optishear-l2-gsm8k", "optishear-l3-gsm8k"};

/// Named metrics; throws Error for unknown names.
MetricKind preset(std::string_view name);

/// A preset name, or "custom:a,b,f1,f2" with names or integer codes.
/// Throws Error on anything else.
MetricKind parse_metric(std::string_view text);

/// "a,b,f1,f2" with canonical names or integer codes.
MetricConfig parse_metric_config(std::string_view text);

}  // namespace prunesearch
