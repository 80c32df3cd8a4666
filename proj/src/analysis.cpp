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

#include "prunesearch/analysis.hpp"

#include <cmath>

#include "json.hpp"
#include "prunesearch/error.hpp"
#include "prunesearch/io.hpp"

namespace prunesearch {

using nlohmann::json;

namespace {

const SubModuleStats& require_stats(const ActivationStats& stats,
                                    const std::string& name) {
  auto it = stats.find(name);
  if (it == stats.end()) throw Error("missing activation stats for " + name);
  return it->second;
}

double total(std::span<const double> values) {
  double acc = 0.0;
  for (double x : values) acc += x;
  return acc;
}

}  // namespace

AlignmentReport alignment_discrepancy(const ModelWeights& weights,
                                      const ActivationStats& stats,
                                      const MetricKind& kind) {
  if (std::holds_alternative<MagnitudeMetric>(kind)) {
    throw Error("alignment: the magnitude metric has no activation component");
  }
  const auto& cfg = std::get<MetricConfig>(kind);
  AlignmentReport report;
  report.metric = cfg.to_string();
  double layer_total = 0.0;
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    LayerAlignment layer;
    double diff_total = 0.0;
    for (SubModule sm : kAllSubModules) {
      const std::string name = sub_module_name(l, sm);
      const SubModuleStats& s = require_stats(stats, name);
      const Matrix& w = weights.layers[l].linear(sm);
      if (s.l2.size() != w.cols()) {
        throw Error("alignment: stats for " + name + " do not match weight columns");
      }
      SubModuleAlignment a;
      a.name = name;
      a.weight_sum = total(weight_component(w, cfg.alpha, cfg.f1).values());
      a.activation_sum = total(activation_component(s, cfg.beta, cfg.f2).values());
      a.difference = std::fabs(a.weight_sum - a.activation_sum);
      diff_total += a.difference;
      layer.sub_modules.push_back(std::move(a));
    }
    layer.mean_difference = diff_total / static_cast<double>(kSubModulesPerLayer);
    layer_total += layer.mean_difference;
    report.layers.push_back(std::move(layer));
  }
  if (!report.layers.empty()) {
    report.model_mean = layer_total / static_cast<double>(report.layers.size());
  }
  return report;
}

DistributionReport distribution_summary(const ModelWeights& weights,
                                        const ActivationStats& stats) {
  DistributionReport report;
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    double w_total = 0.0;
    double a_total = 0.0;
    for (SubModule sm : kAllSubModules) {
      const std::string name = sub_module_name(l, sm);
      w_total += abs_sum(weights.layers[l].linear(sm));
      a_total += sum(require_stats(stats, name).l2);
    }
    const double n = static_cast<double>(kSubModulesPerLayer);
    report.layers.push_back(LayerDistribution{w_total / n, a_total / n});
  }
  return report;
}

ReportFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::Csv : ReportFormat::Json;
}

std::string render(const AlignmentReport& report, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = "layer,mean_difference";
    for (SubModule sm : kAllSubModules) {
      out += ',';
      out += to_string(sm);
    }
    out += '\n';
    for (std::size_t l = 0; l < report.layers.size(); ++l) {
      const auto& layer = report.layers[l];
      out += std::to_string(l) + "," + format_real(layer.mean_difference);
      for (const auto& a : layer.sub_modules) out += "," + format_real(a.difference);
      out += '\n';
    }
    return out;
  }
  json layers = json::array();
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    json subs = json::array();
    for (const auto& a : report.layers[l].sub_modules) {
      subs.push_back(json{{"name", a.name},
                          {"weight_sum", a.weight_sum},
                          {"activation_sum", a.activation_sum},
                          {"difference", a.difference}});
    }
    layers.push_back(json{{"layer", l},
                          {"mean_difference", report.layers[l].mean_difference},
                          {"sub_modules", std::move(subs)}});
  }
  return json{{"metric", report.metric},
              {"model_mean", report.model_mean},
              {"layers", std::move(layers)}}
             .dump(1) +
         "\n";
}

std::string render(const DistributionReport& report, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = "layer,weight_l1_mean,activation_l2_sum_mean\n";
    for (std::size_t l = 0; l < report.layers.size(); ++l) {
      out += std::to_string(l) + "," + format_real(report.layers[l].weight_l1_mean) +
             "," + format_real(report.layers[l].activation_l2_sum_mean) + "\n";
    }
    return out;
  }
  json layers = json::array();
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    layers.push_back(json{
        {"layer", l},
        {"weight_l1_mean", report.layers[l].weight_l1_mean},
        {"activation_l2_sum_mean", report.layers[l].activation_l2_sum_mean}});
  }
  return json{{"layers", std::move(layers)}}.dump(1) + "\n";
}

void emit_report(const AlignmentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  write_file(path, render(report, format));
}

void emit_report(const DistributionReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  write_file(path, render(report, format));
}

}  // namespace prunesearch
