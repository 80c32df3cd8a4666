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

#include "prunesearch/metric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "prunesearch/error.hpp"

namespace prunesearch {

namespace {

constexpr std::array<std::string_view, kNumCoeffs> kCoeffNames = {
    "uniform", "global_sum", "frobenius", "global_mean",
    "row_wise", "col_wise", "relative"};

constexpr std::array<std::string_view, kNumTransforms> kTransformNames = {
    "identity", "square", "sqrt", "log1p", "exp_neg", "sigmoid", "softmax"};

double inv(double denominator) {
  return 1.0 / std::max(denominator, kDenominatorEps);
}

template <std::size_t N>
std::optional<std::size_t> parse_code(std::string_view text,
                                      const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (text == names[i]) return i;
  }
  std::size_t code = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), code);
  if (ec == std::errc() && ptr == text.data() + text.size() && code < N) {
    return code;
  }
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

double apply_elementwise(double x, TransformId id) {
  switch (id) {
    case TransformId::Identity: return x;
    case TransformId::Square: return x * x;
    case TransformId::Sqrt: return std::sqrt(x);
    case TransformId::Log1p: return std::log1p(x);
    case TransformId::ExpNeg: return std::exp(-x);
    case TransformId::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case TransformId::Softmax: break;
  }
  throw Error("softmax is not an elementwise transform");
}

}  // namespace

std::string_view to_string(CoeffId id) {
  return kCoeffNames[static_cast<std::size_t>(id)];
}

std::string_view to_string(TransformId id) {
  return kTransformNames[static_cast<std::size_t>(id)];
}

std::optional<CoeffId> parse_coeff(std::string_view text) {
  auto code = parse_code(trim(text), kCoeffNames);
  if (!code) return std::nullopt;
  return static_cast<CoeffId>(*code);
}

std::optional<TransformId> parse_transform(std::string_view text) {
  auto code = parse_code(trim(text), kTransformNames);
  if (!code) return std::nullopt;
  return static_cast<TransformId>(*code);
}

std::size_t MetricConfig::index() const {
  return ((static_cast<std::size_t>(alpha) * kNumCoeffs +
           static_cast<std::size_t>(beta)) *
              kNumTransforms +
          static_cast<std::size_t>(f1)) *
             kNumTransforms +
         static_cast<std::size_t>(f2);
}

MetricConfig MetricConfig::from_index(std::size_t index) {
  if (index >= kMetricSpaceSize) {
    throw Error("metric config index " + std::to_string(index) +
                " out of range");
  }
  MetricConfig c;
  c.f2 = static_cast<TransformId>(index % kNumTransforms);
  index /= kNumTransforms;
  c.f1 = static_cast<TransformId>(index % kNumTransforms);
  index /= kNumTransforms;
  c.beta = static_cast<CoeffId>(index % kNumCoeffs);
  c.alpha = static_cast<CoeffId>(index / kNumCoeffs);
  return c;
}

std::string MetricConfig::to_string() const {
  std::string out(prunesearch::to_string(alpha));
  out += ',';
  out += prunesearch::to_string(beta);
  out += ',';
  out += prunesearch::to_string(f1);
  out += ',';
  out += prunesearch::to_string(f2);
  return out;
}

std::string describe(const MetricKind& kind) {
  if (std::holds_alternative<MagnitudeMetric>(kind)) return "magnitude";
  return std::get<MetricConfig>(kind).to_string();
}

Matrix weight_coefficient(const Matrix& w, CoeffId id) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  switch (id) {
    case CoeffId::Uniform:
      return Matrix(m, n, std::vector<double>(m * n, 1.0));
    case CoeffId::GlobalSum:
      return Matrix(m, n, std::vector<double>(m * n, inv(abs_sum(w))));
    case CoeffId::Frobenius:
      return Matrix(m, n, std::vector<double>(m * n, inv(frobenius_norm(w))));
    case CoeffId::GlobalMean: {
      const double c = static_cast<double>(m * n) * inv(abs_sum(w));
      return Matrix(m, n, std::vector<double>(m * n, c));
    }
    case CoeffId::RowWise: {
      const Vector rows = abs_row_sums(w);
      Matrix out(m, n);
      for (std::size_t i = 0; i < m; ++i) {
        const double c = inv(rows[i]);
        for (double& x : out.row(i)) x = c;
      }
      return out;
    }
    case CoeffId::ColWise: {
      const Vector cols = abs_col_sums(w);
      Matrix out(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = inv(cols[j]);
      return out;
    }
    case CoeffId::Relative: {
      const Vector rows = abs_row_sums(w);
      const Vector cols = abs_col_sums(w);
      Matrix out(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out(i, j) = inv(rows[i]) + inv(cols[j]);
      return out;
    }
  }
  throw Error("unknown coefficient id");
}

Vector activation_coefficient(const SubModuleStats& stats, CoeffId id) {
  const Vector& v = stats.l2;
  const std::size_t n = v.size();
  switch (id) {
    case CoeffId::Uniform:
      return Vector(n, 1.0);
    case CoeffId::GlobalSum:
      return Vector(n, inv(sum(v)));
    case CoeffId::Frobenius:
      return Vector(n, inv(l2_norm(v)));
    case CoeffId::GlobalMean:
      return Vector(n, static_cast<double>(n) * inv(sum(v)));
    case CoeffId::RowWise: {
      if (stats.l1.size() != n) throw Error("stats: l1/l2 length mismatch");
      Vector out(n);
      for (std::size_t j = 0; j < n; ++j) out[j] = inv(stats.l1[j]);
      return out;
    }
    case CoeffId::ColWise: {
      if (stats.l1.size() != n) throw Error("stats: l1/l2 length mismatch");
      return Vector(n, inv(sum(stats.l1)));
    }
    case CoeffId::Relative: {
      const double global = inv(sum(v));
      Vector out(n);
      for (std::size_t j = 0; j < n; ++j) out[j] = global + inv(v[j]);
      return out;
    }
  }
  throw Error("unknown coefficient id");
}

Matrix transform_weights(const Matrix& w, TransformId id) {
  Matrix a = abs(w);
  if (id != TransformId::Softmax) {
    for (double& x : a.values()) x = apply_elementwise(x, id);
    return a;
  }
  // Softmax over i within each column j, max-subtracted.
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<double> col_max(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) col_max[j] = a(0, j);
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col_max[j] = std::max(col_max[j], a(i, j));
  std::vector<double> col_sum(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = std::exp(a(i, j) - col_max[j]);
      col_sum[j] += a(i, j);
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= col_sum[j];
  return a;
}

Vector transform_activations(const Vector& v, TransformId id) {
  Vector out = v;
  if (id != TransformId::Softmax) {
    for (double& x : out.values()) x = apply_elementwise(x, id);
    return out;
  }
  if (out.empty()) return out;
  double mx = out[0];
  for (double x : out.values()) mx = std::max(mx, x);
  double total = 0.0;
  for (double& x : out.values()) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : out.values()) x /= total;
  return out;
}

Matrix weight_component(const Matrix& w, CoeffId alpha, TransformId f1) {
  Matrix coeff = weight_coefficient(w, alpha);
  Matrix transformed = transform_weights(w, f1);
  auto c = coeff.values();
  auto t = transformed.values();
  for (std::size_t i = 0; i < c.size(); ++i) t[i] = c[i] * t[i];
  return transformed;
}

Vector activation_component(const SubModuleStats& stats, CoeffId beta,
                            TransformId f2) {
  Vector coeff = activation_coefficient(stats, beta);
  Vector transformed = transform_activations(stats.l2, f2);
  for (std::size_t j = 0; j < transformed.size(); ++j) {
    transformed[j] = coeff[j] * transformed[j];
  }
  return transformed;
}

Matrix score(const Matrix& w, const SubModuleStats& stats,
             const MetricKind& kind) {
  if (std::holds_alternative<MagnitudeMetric>(kind)) return abs(w);
  if (stats.l2.size() != w.cols()) {
    throw Error("score: stats cover " + std::to_string(stats.l2.size()) +
                " features but weight has " + std::to_string(w.cols()) +
                " input columns");
  }
  const auto& cfg = std::get<MetricConfig>(kind);
  Matrix s = weight_component(w, cfg.alpha, cfg.f1);
  const Vector act = activation_component(stats, cfg.beta, cfg.f2);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= act[j];
  }
  return s;
}

MetricKind preset(std::string_view name) {
  using C = CoeffId;
  using T = TransformId;
  if (name == "magnitude") return MagnitudeMetric{};
  if (name == "wanda") {
    return MetricConfig{C::Uniform, C::Uniform, T::Identity, T::Identity};
  }
  if (name == "ria") {
    return MetricConfig{C::Relative, C::Uniform, T::Identity, T::Sqrt};
  }
  if (name == "optishear-l2-gsm8k") {
    return MetricConfig{C::Frobenius, C::GlobalSum, T::Identity, T::Sqrt};
  }
  if (name == "optishear-l3-gsm8k") {
    return MetricConfig{C::GlobalMean, C::GlobalSum, T::Identity, T::Sqrt};
  }
  throw Error("unknown metric preset '" + std::string(name) + "'");
}

MetricConfig parse_metric_config(std::string_view text) {
  std::vector<std::string_view> parts;
  std::string_view rest = text;
  for (auto comma = rest.find(','); comma != std::string_view::npos;
       comma = rest.find(',')) {
    parts.push_back(rest.substr(0, comma));
    rest.remove_prefix(comma + 1);
  }
  parts.push_back(rest);
  if (parts.size() != 4) {
    throw Error("metric config '" + std::string(text) +
                "': expected four comma-separated fields a,b,f1,f2");
  }
  auto alpha = parse_coeff(parts[0]);
  auto beta = parse_coeff(parts[1]);
  auto f1 = parse_transform(parts[2]);
  auto f2 = parse_transform(parts[3]);
  if (!alpha) throw Error("unknown coefficient '" + std::string(parts[0]) + "'");
  if (!beta) throw Error("unknown coefficient '" + std::string(parts[1]) + "'");
  if (!f1) throw Error("unknown transform '" + std::string(parts[2]) + "'");
  if (!f2) throw Error("unknown transform '" + std::string(parts[3]) + "'");
  return MetricConfig{*alpha, *beta, *f1, *f2};
}

MetricKind parse_metric(std::string_view text) {
  constexpr std::string_view kCustom = "custom:";
  if (text.starts_with(kCustom)) {
    return parse_metric_config(text.substr(kCustom.size()));
  }
  return preset(text);
}

}  // namespace prunesearch
