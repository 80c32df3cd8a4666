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

#include "prunesearch/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "prunesearch/error.hpp"
#include "prunesearch/rng.hpp"

namespace prunesearch {

std::size_t CalibrationSet::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

void CalibrationSet::validate(const ModelConfig& config) const {
  if (sequences.empty()) throw Error("empty calibration set");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    const std::string where = "calibration sequence " + std::to_string(i);
    if (seq.empty()) throw Error(where + " is empty");
    if (seq.size() > config.max_seq_len) {
      throw Error(where + " has " + std::to_string(seq.size()) +
                  " tokens, exceeding max_seq_len " +
                  std::to_string(config.max_seq_len));
    }
    for (TokenId t : seq) {
      if (t >= config.vocab_size) {
        throw Error(where + ": token id " + std::to_string(t) +
                    " >= vocab_size " + std::to_string(config.vocab_size));
      }
    }
  }
}

CalibrationSet make_synthetic_calibration(std::size_t vocab_size,
                                          std::size_t num_sequences,
                                          std::size_t length,
                                          std::uint64_t seed) {
  if (vocab_size == 0 || num_sequences == 0 || length == 0) {
    throw Error("synthetic calibration: vocab, count and length must be >= 1");
  }
  Rng rng(seed);
  CalibrationSet calib;
  calib.seed = seed;
  calib.sequences.reserve(num_sequences);
  for (std::size_t s = 0; s < num_sequences; ++s) {
    TokenSequence seq(length);
    for (auto& t : seq) t = static_cast<TokenId>(uniform_index(rng, vocab_size));
    calib.sequences.push_back(std::move(seq));
  }
  return calib;
}

StatsAccumulator::StatsAccumulator(std::size_t features)
    : sum_squares_(features, 0.0), abs_sums_(features, 0.0) {}

void StatsAccumulator::add(const Matrix& block) {
  if (block.cols() != sum_squares_.size()) {
    throw Error("stats: block has " + std::to_string(block.cols()) +
                " features, expected " + std::to_string(sum_squares_.size()));
  }
  for (std::size_t t = 0; t < block.rows(); ++t) {
    auto row = block.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) {
      sum_squares_[j] += row[j] * row[j];
      abs_sums_[j] += std::fabs(row[j]);
    }
  }
  tokens_ += block.rows();
}

SubModuleStats StatsAccumulator::finish() const {
  std::vector<double> l2(sum_squares_.size());
  for (std::size_t j = 0; j < l2.size(); ++j) l2[j] = std::sqrt(sum_squares_[j]);
  return SubModuleStats{Vector(std::move(l2)), Vector(abs_sums_), tokens_};
}

ActivationStats collect_activation_stats(const ModelWeights& w,
                                         const CalibrationSet& calib) {
  calib.validate(w.config);
  std::vector<StatsAccumulator> acc;
  acc.reserve(w.num_prunable());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    for (SubModule sm : kAllSubModules) {
      acc.emplace_back(w.layers[l].linear(sm).cols());
    }
  }
  for (const auto& seq : calib.sequences) {
    ForwardTrace trace = forward(w, seq, true);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i].add(trace.captured_inputs[i]);
    }
  }
  ActivationStats stats;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    for (std::size_t s = 0; s < kSubModulesPerLayer; ++s) {
      stats.emplace(sub_module_name(l, kAllSubModules[s]),
                    acc[l * kSubModulesPerLayer + s].finish());
    }
  }
  return stats;
}

double hidden_divergence(std::span<const Matrix> dense,
                         std::span<const Matrix> pruned) {
  if (dense.size() != pruned.size()) {
    throw Error("divergence: " + std::to_string(dense.size()) +
                " cached sequences vs " + std::to_string(pruned.size()));
  }
  if (dense.empty()) throw Error("divergence: no sequences");
  double total = 0.0;
  for (std::size_t s = 0; s < dense.size(); ++s) {
    const Matrix& a = dense[s];
    const Matrix& b = pruned[s];
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw Error("divergence: shape mismatch at sequence " + std::to_string(s));
    }
    double seq = 0.0;
    for (std::size_t t = 0; t < a.rows(); ++t) {
      auto x = a.row(t);
      auto y = b.row(t);
      double sq = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - y[j];
        sq += d * d;
      }
      seq += sq;
    }
    total += seq / static_cast<double>(a.rows());
  }
  return total / static_cast<double>(dense.size());
}

Fitness divergence(std::span<const Matrix> dense_hidden,
                   const ModelWeights& pruned, const CalibrationSet& calib) {
  if (dense_hidden.size() != calib.sequences.size()) {
    throw Error("divergence: cache holds " +
                std::to_string(dense_hidden.size()) + " sequences, calibration " +
                std::to_string(calib.sequences.size()));
  }
  const auto start = std::chrono::steady_clock::now();
  std::vector<Matrix> hidden = final_hidden_batch(pruned, calib);
  Fitness f;
  f.l_div = hidden_divergence(dense_hidden, hidden);
  f.kind = MagnitudeMetric{};
  f.calibration_seed = calib.seed.value_or(0);
  f.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return f;
}

EvalContext EvalContext::build(ModelWeights weights, CalibrationSet calib,
                               SparsitySpec spec) {
  validate_weights(weights);
  calib.validate(weights.config);
  validate(spec);
  EvalContext ctx{std::move(weights), std::move(calib), spec, {}, {}};
  ctx.stats = collect_activation_stats(ctx.weights, ctx.calib);
  ctx.dense_hidden = final_hidden_batch(ctx.weights, ctx.calib);
  return ctx;
}

Fitness evaluate_config(const EvalContext& ctx, const MetricKind& kind) {
  const auto start = std::chrono::steady_clock::now();
  PruneResult pruned = prune_model(ctx.weights, ctx.stats, kind, ctx.spec);
  Fitness f = divergence(ctx.dense_hidden, pruned.weights, ctx.calib);
  f.kind = kind;
  f.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return f;
}

Fitness Evaluator::evaluate(const MetricKind& kind) {
  ++count_;
  return evaluate_config(ctx_, kind);
}

std::vector<Fitness> Evaluator::evaluate_batch(std::span<const MetricKind> kinds,
                                               unsigned jobs) {
  std::vector<Fitness> out(kinds.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(kinds.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < kinds.size(); ++i) out[i] = evaluate(kinds[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < kinds.size(); i = next++) {
      try {
        out[i] = evaluate(kinds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace prunesearch
