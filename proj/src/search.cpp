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

#include "prunesearch/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>

#include "prunesearch/error.hpp"

namespace prunesearch {

namespace {

constexpr std::size_t kMaxMatingAttempts = 10000;

double clip_gene(double g) { return std::clamp(g, 0.0, kGeneUpper); }

std::size_t decode_gene(double g) {
  return std::min(static_cast<std::size_t>(std::floor(g * 7.0)),
                  std::size_t{6});
}

// Fitness memo plus trial log shared by the search drivers. Every config
// is evaluated at most once; repeats are logged as cached trials.
class TrialLedger {
 public:
  TrialLedger(const EvalContext& ctx, std::size_t budget, unsigned jobs)
      : evaluator_(ctx), budget_(budget), jobs_(jobs) {}

  std::size_t remaining() const { return budget_ - evaluated_; }
  bool known(std::size_t key) const { return memo_.count(key) != 0; }

  // Resolves a batch of candidates in order. New configs are evaluated
  // while budget remains; returns the fitness of each candidate, or
  // nullopt for candidates dropped for lack of budget.
  std::vector<std::optional<double>> resolve(
      std::span<const MetricConfig> candidates, std::size_t generation) {
    std::vector<MetricKind> fresh;
    std::set<std::size_t> pending;
    std::vector<bool> admitted(candidates.size(), false);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const std::size_t key = candidates[i].index();
      if (memo_.count(key) || pending.count(key)) {
        admitted[i] = true;
      } else if (fresh.size() < remaining()) {
        pending.insert(key);
        fresh.push_back(candidates[i]);
        admitted[i] = true;
      }
    }
    std::vector<Fitness> results = evaluator_.evaluate_batch(fresh, jobs_);
    evaluated_ += results.size();
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      memo_.emplace(std::get<MetricConfig>(fresh[i]).index(), results[i].l_div);
    }

    std::set<std::size_t> logged_fresh;
    std::vector<std::optional<double>> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!admitted[i]) continue;
      const std::size_t key = candidates[i].index();
      const bool is_fresh = pending.count(key) && logged_fresh.insert(key).second;
      const double value = memo_.at(key);
      trials_.push_back(Trial{trials_.size(), candidates[i], value, !is_fresh,
                              generation});
      out[i] = value;
    }
    return out;
  }

  SearchResult finish(std::string algorithm, std::uint64_t seed,
                      std::size_t generations) && {
    SearchResult r;
    r.algorithm = std::move(algorithm);
    r.seed = seed;
    r.budget = budget_;
    r.evaluations_used = evaluated_;
    r.distinct_configs_evaluated = memo_.size();
    r.generations = generations;
    r.best_l_div = std::numeric_limits<double>::infinity();
    for (const Trial& t : trials_) {
      if (t.l_div < r.best_l_div) {
        r.best_l_div = t.l_div;
        r.best_config = t.config;
      }
    }
    r.trials = std::move(trials_);
    return r;
  }

 private:
  Evaluator evaluator_;
  std::size_t budget_;
  unsigned jobs_;
  std::size_t evaluated_ = 0;
  std::unordered_map<std::size_t, double> memo_;
  std::vector<Trial> trials_;
};

struct Individual {
  Genome genome;
  MetricConfig config;
  double l_div;
};

}  // namespace

MetricConfig decode(const Genome& genome) {
  for (double g : genome) {
    if (!(g >= 0.0 && g < 1.0)) {
      throw Error("genome gene " + std::to_string(g) + " outside [0, 1)");
    }
  }
  return MetricConfig{static_cast<CoeffId>(decode_gene(genome[0])),
                      static_cast<CoeffId>(decode_gene(genome[1])),
                      static_cast<TransformId>(decode_gene(genome[2])),
                      static_cast<TransformId>(decode_gene(genome[3]))};
}

double sbx_spread(double u, double eta_c) {
  const double exponent = 1.0 / (eta_c + 1.0);
  if (u <= 0.5) return std::pow(2.0 * u, exponent);
  return std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
}

std::pair<double, double> sbx_children(double p1, double p2, double beta) {
  return {0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2),
          0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)};
}

std::pair<Genome, Genome> sbx_crossover(const Genome& p1, const Genome& p2,
                                        double eta_c, Rng& rng) {
  Genome c1{}, c2{};
  for (std::size_t g = 0; g < p1.size(); ++g) {
    const double beta = sbx_spread(uniform01(rng), eta_c);
    auto [a, b] = sbx_children(p1[g], p2[g], beta);
    c1[g] = clip_gene(a);
    c2[g] = clip_gene(b);
  }
  return {c1, c2};
}

double mutation_delta(double u, double eta_m) {
  const double exponent = 1.0 / (eta_m + 1.0);
  if (u < 0.5) return std::pow(2.0 * u, exponent) - 1.0;
  return 1.0 - std::pow(2.0 * (1.0 - u), exponent);
}

Genome polynomial_mutation(Genome genome, double eta_m, double p_mutation,
                           Rng& rng) {
  for (double& g : genome) {
    if (uniform01(rng) < p_mutation) {
      g = clip_gene(g + mutation_delta(uniform01(rng), eta_m));
    }
  }
  return genome;
}

void SearchParams::validate() const {
  if (population < 2 || population % 2 != 0) {
    throw Error("search: population must be even and >= 2");
  }
  if (population > kMetricSpaceSize) {
    throw Error("search: population exceeds the metric space size");
  }
  if (budget < population) {
    throw Error("search: budget (" + std::to_string(budget) +
                ") must be >= population (" + std::to_string(population) + ")");
  }
  if (!(eta_c >= 0.0) || !(eta_m >= 0.0)) {
    throw Error("search: distribution indices must be >= 0");
  }
  if (!(p_crossover >= 0.0 && p_crossover <= 1.0) ||
      !(p_mutation >= 0.0 && p_mutation <= 1.0)) {
    throw Error("search: probabilities must lie in [0, 1]");
  }
}

std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<std::vector<double>>& objectives) {
  const std::size_t n = objectives.size();
  auto dominates = [&](std::size_t a, std::size_t b) {
    bool strictly = false;
    for (std::size_t k = 0; k < objectives[a].size(); ++k) {
      if (objectives[a][k] > objectives[b][k]) return false;
      if (objectives[a][k] < objectives[b][k]) strictly = true;
    }
    return strictly;
  };
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dom_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(p, q)) {
        dominated[p].push_back(q);
      } else if (dominates(q, p)) {
        ++dom_count[p];
      }
    }
    if (dom_count[p] == 0) fronts[0].push_back(p);
  }
  for (std::size_t f = 0; !fronts[f].empty(); ++f) {
    std::vector<std::size_t> next;
    for (std::size_t p : fronts[f]) {
      for (std::size_t q : dominated[p]) {
        if (--dom_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

std::vector<double> crowding_distance(
    std::span<const std::size_t> front,
    const std::vector<std::vector<double>>& objectives) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(front.size(), 0.0);
  if (front.size() <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  const std::size_t n_obj = objectives[front[0]].size();
  std::vector<std::size_t> order(front.size());
  for (std::size_t k = 0; k < n_obj; ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return objectives[front[a]][k] < objectives[front[b]][k];
    });
    const double lo = objectives[front[order.front()]][k];
    const double hi = objectives[front[order.back()]][k];
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    if (hi == lo) continue;
    for (std::size_t r = 1; r + 1 < order.size(); ++r) {
      dist[order[r]] += (objectives[front[order[r + 1]]][k] -
                         objectives[front[order[r - 1]]][k]) /
                        (hi - lo);
    }
  }
  return dist;
}

std::vector<Survivor> environmental_selection(
    const std::vector<std::vector<double>>& objectives, std::size_t mu) {
  std::vector<Survivor> out;
  const auto fronts = non_dominated_sort(objectives);
  for (std::size_t rank = 0; rank < fronts.size() && out.size() < mu; ++rank) {
    const auto& front = fronts[rank];
    const auto dist = crowding_distance(front, objectives);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), 0);
    if (out.size() + front.size() > mu) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
      order.resize(mu - out.size());
      std::sort(order.begin(), order.end());
    }
    for (std::size_t i : order) out.push_back(Survivor{front[i], rank, dist[i]});
  }
  return out;
}

SearchResult nsga2_search(const EvalContext& ctx, const SearchParams& params) {
  params.validate();
  Rng rng(params.seed);
  TrialLedger ledger(ctx, params.budget, params.jobs);

  // Initial population: distinct configs, drawn uniformly.
  std::vector<Genome> genomes;
  std::vector<MetricConfig> configs;
  std::set<std::size_t> seen;
  while (genomes.size() < params.population) {
    Genome g;
    for (double& x : g) x = uniform01(rng);
    const MetricConfig c = decode(g);
    if (!seen.insert(c.index()).second) continue;
    genomes.push_back(g);
    configs.push_back(c);
  }
  const auto initial = ledger.resolve(configs, 0);
  std::vector<Individual> population;
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    population.push_back(Individual{genomes[i], configs[i], *initial[i]});
  }

  auto select = [&](std::vector<Individual> pool) {
    std::vector<std::vector<double>> objectives;
    objectives.reserve(pool.size());
    for (const auto& ind : pool) objectives.push_back({ind.l_div});
    std::vector<Survivor> survivors =
        environmental_selection(objectives, params.population);
    std::vector<Individual> next;
    next.reserve(survivors.size());
    for (const auto& s : survivors) next.push_back(pool[s.index]);
    return std::make_pair(std::move(next), std::move(survivors));
  };

  std::vector<Individual> parents;
  std::vector<Survivor> meta;
  std::tie(parents, meta) = select(std::move(population));
  auto best_of = [](const std::vector<Individual>& pop) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ind : pop) best = std::min(best, ind.l_div);
    return best;
  };
  double best = best_of(parents);
  std::size_t stale = 0;
  std::size_t generation = 0;

  // Crowded-comparison binary tournament.
  auto tournament = [&]() -> const Individual& {
    const std::size_t a = uniform_index(rng, parents.size());
    const std::size_t b = uniform_index(rng, parents.size());
    const Survivor& sa = meta[a];
    const Survivor& sb = meta[b];
    if (sa.rank != sb.rank) return sa.rank < sb.rank ? parents[a] : parents[b];
    if (sa.crowding != sb.crowding) {
      return sa.crowding > sb.crowding ? parents[a] : parents[b];
    }
    return parents[std::min(a, b)];
  };

  while (ledger.remaining() > 0) {
    ++generation;
    // Offspring that decode to an already evaluated config, or repeat a
    // sibling, are discarded and mating is repeated.
    const std::size_t wanted = std::min(params.population, ledger.remaining());
    std::vector<Genome> offspring;
    std::vector<MetricConfig> child_configs;
    std::set<std::size_t> batch;
    auto admit = [&](const Genome& g) {
      const MetricConfig c = decode(g);
      if (offspring.size() >= wanted || ledger.known(c.index()) ||
          !batch.insert(c.index()).second) {
        return;
      }
      offspring.push_back(g);
      child_configs.push_back(c);
    };
    for (std::size_t attempt = 0;
         offspring.size() < wanted && attempt < kMaxMatingAttempts; ++attempt) {
      const Genome p1 = tournament().genome;
      const Genome p2 = tournament().genome;
      Genome c1 = p1, c2 = p2;
      if (uniform01(rng) < params.p_crossover) {
        std::tie(c1, c2) = sbx_crossover(p1, p2, params.eta_c, rng);
      }
      admit(polynomial_mutation(c1, params.eta_m, params.p_mutation, rng));
      admit(polynomial_mutation(c2, params.eta_m, params.p_mutation, rng));
    }

    const auto fitness = ledger.resolve(child_configs, generation);

    // (mu + lambda) pool without duplicate configs.
    std::set<std::size_t> in_pool;
    std::vector<Individual> pool = parents;
    for (const auto& ind : pool) in_pool.insert(ind.config.index());
    for (std::size_t i = 0; i < offspring.size(); ++i) {
      if (!fitness[i]) continue;
      if (!in_pool.insert(child_configs[i].index()).second) continue;
      pool.push_back(Individual{offspring[i], child_configs[i], *fitness[i]});
    }
    std::tie(parents, meta) = select(std::move(pool));

    const double gen_best = best_of(parents);
    if (gen_best < best) {
      best = gen_best;
      stale = 0;
    } else if (++stale >= params.patience) {
      break;
    }
  }

  return std::move(ledger).finish("nsga2", params.seed, generation + 1);
}

SearchResult random_search(const EvalContext& ctx, std::size_t budget,
                           std::uint64_t seed, bool without_replacement,
                           unsigned jobs) {
  if (budget < 1) throw Error("random search: budget must be >= 1");
  Rng rng(seed);
  const std::size_t target = std::min(budget, kMetricSpaceSize);
  TrialLedger ledger(ctx, target, jobs);

  std::vector<MetricConfig> draws;
  if (without_replacement) {
    std::vector<std::size_t> perm(kMetricSpaceSize);
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with a portable index draw.
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      std::swap(perm[i], perm[uniform_index(rng, i + 1)]);
    }
    for (std::size_t i = 0; i < target; ++i) {
      draws.push_back(MetricConfig::from_index(perm[i]));
    }
  } else {
    std::set<std::size_t> distinct;
    while (distinct.size() < target) {
      const std::size_t idx = uniform_index(rng, kMetricSpaceSize);
      distinct.insert(idx);
      draws.push_back(MetricConfig::from_index(idx));
    }
  }
  ledger.resolve(draws, 0);
  return std::move(ledger).finish(
      without_replacement ? "random-without-replacement" : "random", seed, 1);
}

std::vector<TableRow> exhaustive_search(const EvalContext& ctx, unsigned jobs) {
  std::vector<MetricKind> kinds;
  kinds.reserve(kMetricSpaceSize);
  for (std::size_t i = 0; i < kMetricSpaceSize; ++i) {
    kinds.push_back(MetricConfig::from_index(i));
  }
  Evaluator evaluator(ctx);
  const std::vector<Fitness> results = evaluator.evaluate_batch(kinds, jobs);
  std::vector<TableRow> table;
  table.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    table.push_back(TableRow{MetricConfig::from_index(i), results[i].l_div});
  }
  std::stable_sort(table.begin(), table.end(),
                   [](const TableRow& a, const TableRow& b) {
                     return a.l_div < b.l_div;
                   });
  return table;
}

}  // namespace prunesearch
