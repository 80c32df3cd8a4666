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

#include <filesystem>
#include <string>
#include <vector>

#include "prunesearch/metric.hpp"
#include "prunesearch/model.hpp"
#include "prunesearch/prune.hpp"

namespace prunesearch {

struct SubModuleAlignment {
  std::string name;
  double weight_sum = 0.0;      ///< sum_ij alpha(|W|)_ij * F1(|W|)_ij
  double activation_sum = 0.0;  ///< sum_j beta(v)_j * F2(v)_j
  double difference = 0.0;      ///< |weight_sum - activation_sum|
};

struct LayerAlignment {
  std::vector<SubModuleAlignment> sub_modules;
  double mean_difference = 0.0;
};

struct AlignmentReport {
  std::string metric;
  std::vector<LayerAlignment> layers;
  double model_mean = 0.0;  ///< mean of the per-layer means
};

/// Gap between the summed weight and activation components of a metric, per
/// sub-module. Throws Error for the magnitude metric or missing stats.
AlignmentReport alignment_discrepancy(const ModelWeights& weights,
                                      const ActivationStats& stats,
                                      const MetricKind& kind);

struct LayerDistribution {
  double weight_l1_mean = 0.0;          ///< mean over sub-modules of sum|W|
  double activation_l2_sum_mean = 0.0;  ///< mean over sub-modules of sum_j v_j
};

struct DistributionReport {
  std::vector<LayerDistribution> layers;
};

DistributionReport distribution_summary(const ModelWeights& weights,
                                        const ActivationStats& stats);

enum class ReportFormat { Json, Csv };

/// Json unless the path ends in ".csv".
ReportFormat format_for_path(const std::filesystem::path& path);

// CSV columns:
//   alignment:    layer,mean_difference,q,k,v,o,gate,up,down
//   distribution: layer,weight_l1_mean,activation_l2_sum_mean
std::string render(const AlignmentReport& report, ReportFormat format);
std::string render(const DistributionReport& report, ReportFormat format);

/// Writes the report; throws IoError on failure.
void emit_report(const AlignmentReport& report, ReportFormat format,
                 const std::filesystem::path& path);
void emit_report(const DistributionReport& report, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace prunesearch
