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

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "prunesearch/calibration.hpp"
#include "prunesearch/metric.hpp"
#include "prunesearch/model.hpp"
#include "prunesearch/prune.hpp"

namespace prunesearch {

/// Running per-feature sums over captured activation blocks.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(std::size_t features);

  /// Adds a T x features block of activations.
  void add(const Matrix& block);
  SubModuleStats finish() const;

 private:
  std::vector<double> sum_squares_;
  std::vector<double> abs_sums_;
  std::uint64_t tokens_ = 0;
};

/// Forwards every calibration sequence with capture on and accumulates
/// ||X_j||_2 and sum_t |X_tj| over all tokens of all sequences.
ActivationStats collect_activation_stats(const ModelWeights& w,
                                         const CalibrationSet& calib);

/// Mean over sequences of the per-token mean squared L2 distance between
/// hidden rows. Throws Error on sequence-count or shape mismatch.
double hidden_divergence(std::span<const Matrix> dense,
                         std::span<const Matrix> pruned);

struct Fitness {
  double l_div = 0.0;
  MetricKind kind;
  std::uint64_t calibration_seed = 0;
  double wall_seconds = 0.0;  ///< informational; never serialized
};

/// L_div between cached dense hidden states and a pruned model.
Fitness divergence(std::span<const Matrix> dense_hidden,
                   const ModelWeights& pruned, const CalibrationSet& calib);

/// Everything a metric evaluation needs, computed once per run.
/// Immutable after construction and safe to share across threads.
struct EvalContext {
  ModelWeights weights;
  CalibrationSet calib;
  SparsitySpec spec;
  ActivationStats stats;
  std::vector<Matrix> dense_hidden;

  /// Validates the inputs and computes stats and the dense hidden cache.
  static EvalContext build(ModelWeights weights, CalibrationSet calib,
                           SparsitySpec spec);
};

/// Score, mask, prune a copy, and measure divergence. Pure in (ctx, kind).
Fitness evaluate_config(const EvalContext& ctx, const MetricKind& kind);

/// Wraps evaluate_config with an evaluation counter (the budget ledger).
class Evaluator {
 public:
  explicit Evaluator(const EvalContext& ctx) : ctx_(ctx) {}

  Fitness evaluate(const MetricKind& kind);
  /// Evaluates `kinds` on up to `jobs` threads; results in input order and
  /// identical for every job count.
  std::vector<Fitness> evaluate_batch(std::span<const MetricKind> kinds,
                                      unsigned jobs);

  std::uint64_t evaluations() const { return count_.load(); }
  const EvalContext& context() const { return ctx_; }

 private:
  const EvalContext& ctx_;
  std::atomic<std::uint64_t> count_{0};
};

}  // namespace prunesearch
