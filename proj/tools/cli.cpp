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

#include "prunesearch/cli.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "prunesearch/analysis.hpp"
#include "prunesearch/error.hpp"
#include "prunesearch/io.hpp"
#include "prunesearch/metric.hpp"
#include "prunesearch/objective.hpp"
#include "prunesearch/prune.hpp"
#include "prunesearch/search.hpp"

namespace prunesearch::cli {

namespace {

constexpr const char* kFooter =
    "Metrics (--metric):\n"
    "  magnitude | wanda | ria | optishear-l2-gsm8k | optishear-l3-gsm8k |\n"
    "  custom:a,b,f1,f2\n"
    "  where a,b are coefficients {uniform, global_sum, frobenius, global_mean,\n"
    "  row_wise, col_wise, relative} and f1,f2 are transforms {identity, square,\n"
    "  sqrt, log1p, exp_neg, sigmoid, softmax}; integer codes 0-6 also work.\n"
    "Sparsity (--sparsity):\n"
    "  a decimal in [0,1] is the unstructured ratio pruned per output row\n"
    "  (e.g. 0.5); N:M keeps N of every M consecutive weights (e.g. 2:4, 4:8).\n"
    "Result files are CSV when the path ends in .csv, JSON otherwise.\n"
    "Exit codes: 0 success, 1 usage error, 2 data or validation error.";

const CLI::Validator kSparsityGrammar(
    [](std::string& text) -> std::string {
      try {
        parse_sparsity(text);
      } catch (const Error& e) {
        return e.what();
      }
      return {};
    },
    "RATIO|N:M");

const CLI::Validator kMetricGrammar(
    [](std::string& text) -> std::string {
      try {
        parse_metric(text);
      } catch (const Error& e) {
        return e.what();
      }
      return {};
    },
    "METRIC");

struct Options {
  // gen-model
  ModelConfig model_config;
  std::uint64_t seed = 0;
  // gen-calib
  std::size_t vocab = 128;
  std::size_t seqs = 8;
  std::size_t len = 64;
  // shared paths
  std::string model, calib, stats, out, masks_out, dense, pruned;
  std::string metric = "wanda";
  std::string sparsity = "0.5";
  // search
  std::string algo = "nsga2";
  SearchParams search;
  bool without_replacement = false;
  unsigned jobs = 1;
};

int gen_model(const Options& o, std::ostream& out) {
  ModelWeights w = init_model(o.model_config, o.seed);
  write_model(o.out, w);
  out << "wrote model (" << w.config.n_layers << " layers, d_model "
      << w.config.d_model << ", seed " << o.seed << ") to " << o.out << "\n";
  return kExitOk;
}

int gen_calib(const Options& o, std::ostream& out) {
  CalibrationSet calib = make_synthetic_calibration(o.vocab, o.seqs, o.len, o.seed);
  write_calib(o.out, calib);
  out << "wrote " << calib.sequences.size() << " sequences x " << o.len
      << " tokens (seed " << o.seed << ") to " << o.out << "\n";
  return kExitOk;
}

int stats_cmd(const Options& o, std::ostream& out) {
  const ModelWeights w = read_model(o.model);
  const CalibrationSet calib = read_calib(o.calib);
  const ActivationStats stats = collect_activation_stats(w, calib);
  write_stats(o.out, stats);
  out << "wrote stats for " << stats.size() << " sub-modules over "
      << calib.token_count() << " tokens to " << o.out << "\n";
  return kExitOk;
}

int prune_cmd(const Options& o, std::ostream& out) {
  const ModelWeights w = read_model(o.model);
  const MetricKind kind = parse_metric(o.metric);
  const ActivationStats stats = o.stats.empty() ? ActivationStats{} : read_stats(o.stats);
  const PruneResult result = prune_model(w, stats, kind, parse_sparsity(o.sparsity));
  write_model(o.out, result.weights);
  if (!o.masks_out.empty()) write_masks(o.masks_out, result.masks);
  std::size_t kept = 0, total = 0;
  for (const auto& [name, m] : result.masks) {
    kept += m.kept_count();
    total += m.bits.size();
  }
  out << "pruned " << result.masks.size() << " sub-modules with "
      << describe(kind) << " at sparsity " << o.sparsity << ": kept " << kept
      << " of " << total << " weights; wrote " << o.out << "\n";
  return kExitOk;
}

int eval_cmd(const Options& o, std::ostream& out) {
  const ModelWeights dense = read_model(o.dense);
  const ModelWeights pruned = read_model(o.pruned);
  if (!(dense.config == pruned.config)) {
    throw Error("eval: dense and pruned models have different configs");
  }
  const CalibrationSet calib = read_calib(o.calib);
  const auto hidden = final_hidden_batch(dense, calib);
  const Fitness f = divergence(hidden, pruned, calib);
  out << "l_div = " << format_real(f.l_div) << "\n";
  return kExitOk;
}

EvalContext load_context(const Options& o) {
  return EvalContext::build(read_model(o.model), read_calib(o.calib),
                            parse_sparsity(o.sparsity));
}

int search_cmd(const Options& o, std::ostream& out) {
  const EvalContext ctx = load_context(o);
  SearchResult result;
  if (o.algo == "random") {
    result = random_search(ctx, o.search.budget, o.search.seed,
                           o.without_replacement, o.jobs);
  } else {
    SearchParams params = o.search;
    params.jobs = o.jobs;
    result = nsga2_search(ctx, params);
  }
  write_results(o.out, result);
  out << result.algorithm << ": best " << result.best_config.to_string()
      << " l_div = " << format_real(result.best_l_div) << " ("
      << result.evaluations_used << " evaluations, " << result.trials.size()
      << " trials, " << result.generations << " generations); wrote " << o.out
      << "\n";
  return kExitOk;
}

int enumerate_cmd(const Options& o, std::ostream& out) {
  const EvalContext ctx = load_context(o);
  const auto table = exhaustive_search(ctx, o.jobs);
  write_table(o.out, table);
  out << "evaluated " << table.size() << " configs; minimum "
      << table.front().config.to_string()
      << " l_div = " << format_real(table.front().l_div) << "; wrote " << o.out
      << "\n";
  return kExitOk;
}

int align_cmd(const Options& o, std::ostream& out) {
  const ModelWeights w = read_model(o.model);
  const ActivationStats stats = read_stats(o.stats);
  const AlignmentReport report = alignment_discrepancy(w, stats, parse_metric(o.metric));
  emit_report(report, format_for_path(o.out), o.out);
  out << "alignment discrepancy for " << o.metric << ": model mean "
      << format_real(report.model_mean) << "; wrote " << o.out << "\n";
  return kExitOk;
}

int dist_cmd(const Options& o, std::ostream& out) {
  const ModelWeights w = read_model(o.model);
  const ActivationStats stats = read_stats(o.stats);
  const DistributionReport report = distribution_summary(w, stats);
  emit_report(report, format_for_path(o.out), o.out);
  out << "distribution summary for " << report.layers.size()
      << " layers; wrote " << o.out << "\n";
  return kExitOk;
}

void add_sparsity(CLI::App* cmd, Options& o) {
  cmd->add_option("--sparsity", o.sparsity, "Ratio in [0,1] or N:M")
      ->check(kSparsityGrammar)
      ->capture_default_str();
}

void add_jobs(CLI::App* cmd, Options& o) {
  cmd->add_option("--jobs", o.jobs, "Worker threads; output is identical for any count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Pruning-metric discovery on small decoder-only transformers",
               args.empty() ? "prunesearch" : args[0]};
  app.footer(kFooter);
  app.require_subcommand(1);
  Options o;

  auto* gm = app.add_subcommand("gen-model", "Create a seeded random model");
  gm->add_option("--d-model", o.model_config.d_model, "Hidden size")->capture_default_str();
  gm->add_option("--layers", o.model_config.n_layers, "Transformer blocks")->capture_default_str();
  gm->add_option("--heads", o.model_config.n_heads, "Attention heads")->capture_default_str();
  gm->add_option("--d-ff", o.model_config.d_ff, "MLP hidden size")->capture_default_str();
  gm->add_option("--vocab", o.model_config.vocab_size, "Vocabulary size")->capture_default_str();
  gm->add_option("--max-seq", o.model_config.max_seq_len, "Maximum sequence length")->capture_default_str();
  gm->add_option("--seed", o.seed, "Weight seed")->capture_default_str();
  gm->add_option("--out", o.out, "Output model file")->required();

  auto* gc = app.add_subcommand("gen-calib", "Create synthetic calibration sequences");
  gc->add_option("--vocab", o.vocab, "Vocabulary size")->capture_default_str();
  gc->add_option("--seqs", o.seqs, "Number of sequences")->capture_default_str();
  gc->add_option("--len", o.len, "Tokens per sequence")->capture_default_str();
  gc->add_option("--seed", o.seed, "Token seed")->capture_default_str();
  gc->add_option("--out", o.out, "Output JSONL file")->required();

  auto* st = app.add_subcommand("stats", "Collect per-feature activation statistics");
  st->add_option("--model", o.model, "Model file")->required();
  st->add_option("--calib", o.calib, "Calibration JSONL")->required();
  st->add_option("--out", o.out, "Output stats JSON")->required();

  auto* pr = app.add_subcommand("prune", "Prune a model with a metric");
  pr->add_option("--model", o.model, "Model file")->required();
  pr->add_option("--stats", o.stats, "Stats JSON (not needed for magnitude)");
  pr->add_option("--metric", o.metric, "Metric preset or custom:a,b,f1,f2")
      ->check(kMetricGrammar)
      ->capture_default_str();
  add_sparsity(pr, o);
  pr->add_option("--out", o.out, "Output pruned model file")->required();
  pr->add_option("--masks-out", o.masks_out, "Optional output mask file");

  auto* ev = app.add_subcommand("eval", "Print L_div between a dense and a pruned model");
  ev->add_option("--dense", o.dense, "Dense model file")->required();
  ev->add_option("--pruned", o.pruned, "Pruned model file")->required();
  ev->add_option("--calib", o.calib, "Calibration JSONL")->required();

  auto* se = app.add_subcommand("search", "Search the metric space");
  se->add_option("--model", o.model, "Model file")->required();
  se->add_option("--calib", o.calib, "Calibration JSONL")->required();
  add_sparsity(se, o);
  se->add_option("--algo", o.algo, "Search algorithm")
      ->check(CLI::IsMember({"nsga2", "random"}))
      ->capture_default_str();
  se->add_option("--budget", o.search.budget, "Evaluation budget")->capture_default_str();
  se->add_option("--pop", o.search.population, "Population size (even)")->capture_default_str();
  se->add_option("--seed", o.search.seed, "Search seed")->capture_default_str();
  se->add_option("--eta-c", o.search.eta_c, "SBX distribution index")->capture_default_str();
  se->add_option("--eta-m", o.search.eta_m, "Mutation distribution index")->capture_default_str();
  se->add_option("--p-crossover", o.search.p_crossover, "Crossover probability")->capture_default_str();
  se->add_option("--p-mutation", o.search.p_mutation, "Per-gene mutation probability")->capture_default_str();
  se->add_option("--patience", o.search.patience, "Generations without improvement before stopping")->capture_default_str();
  se->add_flag("--without-replacement", o.without_replacement,
               "Random search: sample configs without replacement");
  add_jobs(se, o);
  se->add_option("--out", o.out, "Output results (JSON or .csv)")->required();

  auto* en = app.add_subcommand("enumerate", "Evaluate all 2401 metric configs");
  en->add_option("--model", o.model, "Model file")->required();
  en->add_option("--calib", o.calib, "Calibration JSONL")->required();
  add_sparsity(en, o);
  add_jobs(en, o);
  en->add_option("--out", o.out, "Output table (JSON or .csv)")->required();

  auto* al = app.add_subcommand("align", "Weight-activation alignment report");
  al->add_option("--model", o.model, "Model file")->required();
  al->add_option("--stats", o.stats, "Stats JSON")->required();
  al->add_option("--metric", o.metric, "Metric preset or custom:a,b,f1,f2")
      ->check(kMetricGrammar)
      ->capture_default_str();
  al->add_option("--out", o.out, "Output report (JSON or .csv)")->required();

  auto* di = app.add_subcommand("dist", "Per-layer weight/activation distribution summary");
  di->add_option("--model", o.model, "Model file")->required();
  di->add_option("--stats", o.stats, "Stats JSON")->required();
  di->add_option("--out", o.out, "Output report (JSON or .csv)")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gm) return gen_model(o, out);
    if (*gc) return gen_calib(o, out);
    if (*st) return stats_cmd(o, out);
    if (*pr) return prune_cmd(o, out);
    if (*ev) return eval_cmd(o, out);
    if (*se) return search_cmd(o, out);
    if (*en) return enumerate_cmd(o, out);
    if (*al) return align_cmd(o, out);
    if (*di) return dist_cmd(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace prunesearch::cli
