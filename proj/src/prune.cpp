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

#include "prunesearch/prune.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "prunesearch/error.hpp"

namespace prunesearch {

namespace {

// Marks the `keep` highest scores in scores[begin, begin + len) of one row.
// Sorting by (score desc, column asc) makes ties keep the lower column.
void keep_top(std::span<const double> row, std::size_t begin, std::size_t len,
              std::size_t keep, std::span<std::uint8_t> out,
              std::vector<std::size_t>& order) {
  order.resize(len);
  std::iota(order.begin(), order.end(), begin);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  for (std::size_t r = 0; r < len; ++r) out[order[r]] = r < keep ? 1 : 0;
}

std::size_t parse_count(std::string_view text, std::string_view whole) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error("sparsity '" + std::string(whole) + "': expected N:M integers");
  }
  return value;
}

}  // namespace

void validate(const SparsitySpec& spec) {
  if (const auto* u = std::get_if<Unstructured>(&spec)) {
    if (!(u->ratio >= 0.0 && u->ratio <= 1.0)) {
      throw Error("sparsity ratio must lie in [0, 1]");
    }
  } else {
    const auto& s = std::get<SemiStructured>(spec);
    if (s.n == 0 || s.n > s.m) {
      throw Error("N:M sparsity requires 0 < N <= M");
    }
  }
}

SparsitySpec parse_sparsity(std::string_view text) {
  SparsitySpec spec;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    spec = SemiStructured{parse_count(text.substr(0, colon), text),
                          parse_count(text.substr(colon + 1), text)};
  } else {
    double ratio = 0.0;
    std::istringstream in{std::string(text)};
    in >> ratio;
    if (text.empty() || in.fail() || !in.eof()) {
      throw Error("sparsity '" + std::string(text) +
                  "': expected a ratio in [0,1] or N:M");
    }
    spec = Unstructured{ratio};
  }
  validate(spec);
  return spec;
}

std::string to_string(const SparsitySpec& spec) {
  if (const auto* s = std::get_if<SemiStructured>(&spec)) {
    return std::to_string(s->n) + ":" + std::to_string(s->m);
  }
  std::ostringstream out;
  out << std::get<Unstructured>(spec).ratio;
  return out.str();
}

double implied_ratio(const SparsitySpec& spec) {
  if (const auto* s = std::get_if<SemiStructured>(&spec)) {
    return 1.0 - static_cast<double>(s->n) / static_cast<double>(s->m);
  }
  return std::get<Unstructured>(spec).ratio;
}

std::size_t pruned_per_row(double ratio, std::size_t cols) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(cols)));
}

std::size_t Mask::kept_count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

Mask build_mask(const Matrix& scores, const SparsitySpec& spec) {
  validate(spec);
  Mask mask(scores.rows(), scores.cols(), 0);
  std::vector<std::size_t> order;
  const std::size_t cols = scores.cols();

  if (const auto* nm = std::get_if<SemiStructured>(&spec)) {
    if (cols % nm->m != 0) {
      throw Error("N:M sparsity: " + std::to_string(cols) +
                  " columns not divisible by M=" + std::to_string(nm->m));
    }
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      std::span<std::uint8_t> out(mask.bits.data() + i * cols, cols);
      for (std::size_t g = 0; g < cols; g += nm->m) {
        keep_top(scores.row(i), g, nm->m, nm->n, out, order);
      }
    }
    return mask;
  }

  const double ratio = std::get<Unstructured>(spec).ratio;
  const std::size_t keep = cols - pruned_per_row(ratio, cols);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::span<std::uint8_t> out(mask.bits.data() + i * cols, cols);
    keep_top(scores.row(i), 0, cols, keep, out, order);
  }
  return mask;
}

Matrix apply_mask(const Matrix& w, const Mask& mask) {
  if (mask.rows != w.rows() || mask.cols != w.cols() ||
      mask.bits.size() != w.size()) {
    throw Error("apply_mask: mask shape " + std::to_string(mask.rows) + "x" +
                std::to_string(mask.cols) + " does not match weight shape " +
                std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
  Matrix out = w;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask.bits[i]) v[i] = 0.0;
  }
  return out;
}

double sparsity_of(const Mask& mask) {
  if (mask.bits.empty()) return 0.0;
  const auto dropped = mask.bits.size() - mask.kept_count();
  return static_cast<double>(dropped) / static_cast<double>(mask.bits.size());
}

PruneResult prune_model(const ModelWeights& weights,
                        const ActivationStats& stats, const MetricKind& kind,
                        const SparsitySpec& spec) {
  const bool needs_stats = !std::holds_alternative<MagnitudeMetric>(kind);
  PruneResult result{weights, {}};
  const SubModuleStats empty;
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    for (SubModule sm : kAllSubModules) {
      const std::string name = sub_module_name(l, sm);
      const SubModuleStats* sub = &empty;
      if (auto it = stats.find(name); it != stats.end()) {
        sub = &it->second;
      } else if (needs_stats) {
        throw Error("prune_model: missing activation stats for " + name);
      }
      const Matrix& w = weights.layers[l].linear(sm);
      Mask mask = build_mask(score(w, *sub, kind), spec);
      result.weights.layers[l].linear(sm) = apply_mask(w, mask);
      result.masks.emplace(name, std::move(mask));
    }
  }
  return result;
}

}  // namespace prunesearch
