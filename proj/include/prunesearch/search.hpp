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

// Searches over the 2401-config metric space. NSGA-II works on a real
// relaxation of the categorical space: each of (alpha, beta, F1, F2) is a
// gene in [0, 1) decoded as min(floor(gene * 7), 6), so SBX crossover and
// polynomial mutation apply unchanged.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prunesearch/metric.hpp"
#include "prunesearch/objective.hpp"
#include "prunesearch/rng.hpp"

namespace prunesearch {

using Genome = std::array<double, 4>;

/// Upper clip for genes so every gene stays strictly below 1.
inline constexpr double kGeneUpper = 1.0 - 1e-9;

/// Throws Error if any gene is outside [0, 1).
MetricConfig decode(const Genome& genome);

/// SBX spread factor beta for a uniform draw u.
double sbx_spread(double u, double eta_c);
/// Children for a given spread factor, before clipping.
std::pair<double, double> sbx_children(double p1, double p2, double beta);
/// Per-gene simulated binary crossover; children clipped to [0, kGeneUpper].
std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2,
                                        double eta_c, Rng& rng);

/// Polynomial-mutation perturbation delta for a uniform draw u.
double mutation_delta(double u, double eta_m);
/// Mutates each gene with probability p_mutation; output clipped.
Genome polynomial_mutation(Genome genome, double eta_m, double p_mutation,
                           Rng& rng);

struct SearchParams {
  std::size_t population = 24;
  std::size_t budget = 350;
  double eta_c = 15.0;
  /// Low index: mutation must be able to cross 1/7-wide decode bins.
  double eta_m = 1.0;
  double p_crossover = 0.9;
  double p_mutation = 0.25;
  std::uint64_t seed = 0;
  std::size_t patience = 5;
  unsigned jobs = 1;

  /// Throws Error unless population is even, 2 <= population <= 2401 and
  /// budget >= population.
  void validate() const;
};

struct Trial {
  std::size_t index = 0;
  MetricConfig config;
  double l_div = 0.0;
  /// Served from the memo; consumed no budget.
  bool cached = false;
  std::size_t generation = 0;
};

struct SearchResult {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::vector<Trial> trials;
  MetricConfig best_config;
  double best_l_div = 0.0;
  std::size_t evaluations_used = 0;
  std::size_t distinct_configs_evaluated = 0;
  std::size_t generations = 0;
};

// NSGA-II building blocks, general in the number of objectives.

/// Fronts of indices by non-domination rank (minimization).
std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<std::vector<double>>& objectives);

/// Crowding distance of each member of `front`, in front order.
std::vector<double> crowding_distance(
    std::span<const std::size_t> front,
    const std::vector<std::vector<double>>& objectives);

struct Survivor {
  std::size_t index;
  std::size_t rank;
  double crowding;
};

/// Elitist selection of `mu` survivors: whole fronts in rank order, the
/// last one truncated by descending crowding distance.
std::vector<Survivor> environmental_selection(
    const std::vector<std::vector<double>>& objectives, std::size_t mu);

/// Evolutionary search minimizing L_div. Deterministic given params.seed
/// and independent of params.jobs.
SearchResult nsga2_search(const EvalContext& ctx, const SearchParams& params);

/// Uniform sampling of configs. With replacement, repeated draws are logged
/// as cached trials; sampling continues until min(budget, 2401) distinct
/// configs are evaluated. Without replacement draws a seeded permutation.
SearchResult random_search(const EvalContext& ctx, std::size_t budget,
                           std::uint64_t seed, bool without_replacement = false,
                           unsigned jobs = 1);

struct TableRow {
  MetricConfig config;
  double l_div = 0.0;
};

/// Every config evaluated once, sorted ascending by l_div (ties by config
/// index).
std::vector<TableRow> exhaustive_search(const EvalContext& ctx,
                                        unsigned jobs = 1);

}  // namespace prunesearch
