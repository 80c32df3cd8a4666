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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "prunesearch/error.hpp"
#include "prunesearch/metric.hpp"
#include "support.hpp"

namespace prunesearch {
namespace {

SubModuleStats stats_of(std::vector<double> v, std::vector<double> l1 = {}) {
  SubModuleStats s;
  s.l2 = Vector(v);
  s.l1 = l1.empty() ? Vector(v) : Vector(std::move(l1));
  s.token_count = 1;
  return s;
}

void expect_rel(double actual, double expected, double tol) {
  EXPECT_LE(std::fabs(actual - expected), tol * std::fabs(expected))
      << "actual " << actual << " expected " << expected;
}

TEST(MetricTest, WeightCoefficients) {
  const Matrix w{{1, 2}, {3, 4}};
  const Matrix global = weight_coefficient(w, CoeffId::GlobalSum);
  for (double c : global.values()) EXPECT_DOUBLE_EQ(c, 0.1);
  const Matrix uniform = weight_coefficient(w, CoeffId::Uniform);
  for (double c : uniform.values()) EXPECT_EQ(c, 1.0);
  EXPECT_NEAR(weight_coefficient(w, CoeffId::Relative)(0, 0), 0.583333, 1e-6);
  EXPECT_DOUBLE_EQ(weight_coefficient(w, CoeffId::Relative)(0, 0), 1.0 / 3 + 1.0 / 4);
  EXPECT_DOUBLE_EQ(weight_coefficient(w, CoeffId::Frobenius)(1, 1), 1.0 / std::sqrt(30.0));
  EXPECT_DOUBLE_EQ(weight_coefficient(w, CoeffId::GlobalMean)(0, 1), 0.4);
  EXPECT_DOUBLE_EQ(weight_coefficient(w, CoeffId::RowWise)(1, 0), 1.0 / 7);
  EXPECT_DOUBLE_EQ(weight_coefficient(w, CoeffId::ColWise)(1, 0), 1.0 / 4);
}

TEST(MetricTest, ActivationCoefficients) {
  const SubModuleStats s = stats_of({3, 4});
  EXPECT_EQ(activation_coefficient(s, CoeffId::Frobenius), (Vector{0.2, 0.2}));
  const Vector g = activation_coefficient(s, CoeffId::GlobalSum);
  EXPECT_DOUBLE_EQ(g[0], 1.0 / 7);
  EXPECT_DOUBLE_EQ(g[1], 1.0 / 7);
  EXPECT_EQ(activation_coefficient(s, CoeffId::Uniform), (Vector{1, 1}));
  const Vector r = activation_coefficient(s, CoeffId::Relative);
  EXPECT_DOUBLE_EQ(r[0], 1.0 / 7 + 1.0 / 3);
}

TEST(MetricTest, ZeroDenominatorsStayFinite) {
  const Matrix w(2, 3);
  const SubModuleStats s = stats_of({0, 0, 0});
  for (std::size_t i = 0; i < kMetricSpaceSize; ++i) {
    const Matrix sc = score(w, s, MetricConfig::from_index(i));
    EXPECT_TRUE(all_finite(sc.values())) << MetricConfig::from_index(i).to_string();
  }
}

TEST(MetricTest, Transforms) {
  EXPECT_EQ(transform_activations(Vector{4, 9}, TransformId::Sqrt), (Vector{2, 3}));
  EXPECT_EQ(transform_activations(Vector{0}, TransformId::ExpNeg), (Vector{1}));
  const Matrix sm = transform_weights(Matrix{{0}, {0}}, TransformId::Softmax);
  EXPECT_EQ(sm(0, 0), 0.5);
  EXPECT_EQ(sm(1, 0), 0.5);
  // Weight transforms act on magnitudes.
  EXPECT_EQ(transform_weights(Matrix{{-2}}, TransformId::Square)(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(transform_weights(Matrix{{-1}}, TransformId::Log1p)(0, 0),
                   std::log1p(1.0));
  EXPECT_DOUBLE_EQ(transform_activations(Vector{0}, TransformId::Sigmoid)[0], 0.5);
}

TEST(MetricTest, SoftmaxIsLargeInputSafe) {
  const Vector out = transform_activations(Vector{1000, 1000}, TransformId::Softmax);
  EXPECT_EQ(out[0], 0.5);
  const Matrix w = transform_weights(Matrix{{800, 1}, {800, 2}}, TransformId::Softmax);
  EXPECT_EQ(w(0, 0), 0.5);
  EXPECT_NEAR(w(0, 1) + w(1, 1), 1.0, 1e-15);
}

TEST(MetricTest, WandaWorkedExample) {
  const Matrix w{{1, -2}, {0, 3}};
  const SubModuleStats s = stats_of({2, 1});
  EXPECT_EQ(score(w, s, preset("wanda")), (Matrix{{2, 2}, {0, 3}}));
  EXPECT_EQ(score(w, s, MagnitudeMetric{}), (Matrix{{1, 2}, {0, 3}}));
}

TEST(MetricTest, FrobeniusGlobalSumSqrtWorkedExample) {
  const Matrix w{{1, 2}, {3, 4}};
  const SubModuleStats s = stats_of({4, 9});
  const Matrix sc = score(w, s, preset("optishear-l2-gsm8k"));
  const double inv_f = 1.0 / std::sqrt(30.0);
  const double act[2] = {2.0 / 13.0, 3.0 / 13.0};
  // (1/sqrt(30)) * (2/13)
  expect_rel(sc(0, 0), 0.0280883363, 1e-9);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      expect_rel(sc(i, j), inv_f * w(i, j) * act[j], 1e-12);
    }
  }
}

TEST(MetricTest, PresetsResolve) {
  EXPECT_EQ(std::get<MetricConfig>(preset("wanda")),
            (MetricConfig{CoeffId::Uniform, CoeffId::Uniform, TransformId::Identity,
                          TransformId::Identity}));
  EXPECT_EQ(std::get<MetricConfig>(preset("ria")),
            (MetricConfig{CoeffId::Relative, CoeffId::Uniform, TransformId::Identity,
                          TransformId::Sqrt}));
  EXPECT_EQ(std::get<MetricConfig>(preset("optishear-l2-gsm8k")),
            (MetricConfig{CoeffId::Frobenius, CoeffId::GlobalSum, TransformId::Identity,
                          TransformId::Sqrt}));
  EXPECT_EQ(std::get<MetricConfig>(preset("optishear-l3-gsm8k")),
            (MetricConfig{CoeffId::GlobalMean, CoeffId::GlobalSum, TransformId::Identity,
                          TransformId::Sqrt}));
  EXPECT_TRUE(std::holds_alternative<MagnitudeMetric>(preset("magnitude")));
  EXPECT_THROW(preset("sparsegpt"), Error);
}

TEST(MetricTest, ParseMetric) {
  const MetricKind k = parse_metric("custom:relative,2,sqrt,6");
  EXPECT_EQ(std::get<MetricConfig>(k),
            (MetricConfig{CoeffId::Relative, CoeffId::Frobenius, TransformId::Sqrt,
                          TransformId::Softmax}));
  EXPECT_THROW(parse_metric("custom:1,2,3"), Error);
  EXPECT_THROW(parse_metric("custom:1,2,3,7"), Error);
  EXPECT_THROW(parse_metric("custom:a,b,c,d"), Error);
  EXPECT_THROW(parse_metric(""), Error);
}

TEST(MetricTest, IndexRoundTripCoversSpace) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < kMetricSpaceSize; ++i) {
    const MetricConfig c = MetricConfig::from_index(i);
    EXPECT_EQ(c.index(), i);
    EXPECT_EQ(parse_metric_config(c.to_string()), c);
    names.insert(c.to_string());
  }
  EXPECT_EQ(names.size(), kMetricSpaceSize);
  EXPECT_THROW(MetricConfig::from_index(kMetricSpaceSize), Error);
}

TEST(MetricTest, StatsWidthMismatchThrows) {
  EXPECT_THROW(score(Matrix(2, 3), stats_of({1, 2}), preset("wanda")), Error);
}

// Independent per-entry evaluation of the meta metric.
double reference_entry(const Matrix& w, const SubModuleStats& s,
                       const MetricConfig& c, std::size_t i, std::size_t j) {
  const std::size_t m = w.rows(), n = w.cols();
  auto g = [](double d) { return 1.0 / std::max(d, 1e-12); };
  double total = 0, fro = 0, row = 0, col = 0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double x = std::fabs(w(a, b));
      total += x;
      fro += x * x;
      if (a == i) row += x;
      if (b == j) col += x;
    }
  }
  double alpha = 1;
  switch (c.alpha) {
    case CoeffId::Uniform: alpha = 1; break;
    case CoeffId::GlobalSum: alpha = g(total); break;
    case CoeffId::Frobenius: alpha = g(std::sqrt(fro)); break;
    case CoeffId::GlobalMean: alpha = double(m * n) * g(total); break;
    case CoeffId::RowWise: alpha = g(row); break;
    case CoeffId::ColWise: alpha = g(col); break;
    case CoeffId::Relative: alpha = g(row) + g(col); break;
  }
  auto elementwise = [](double x, TransformId t) {
    switch (t) {
      case TransformId::Identity: return x;
      case TransformId::Square: return x * x;
      case TransformId::Sqrt: return std::sqrt(x);
      case TransformId::Log1p: return std::log(1.0 + x);
      case TransformId::ExpNeg: return std::exp(-x);
      case TransformId::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
      case TransformId::Softmax: break;
    }
    return 0.0;
  };
  double f1;
  if (c.f1 == TransformId::Softmax) {
    double z = 0;
    for (std::size_t a = 0; a < m; ++a) z += std::exp(std::fabs(w(a, j)));
    f1 = std::exp(std::fabs(w(i, j))) / z;
  } else {
    f1 = elementwise(std::fabs(w(i, j)), c.f1);
  }
  double vsum = 0, vsq = 0, l1sum = 0;
  for (std::size_t b = 0; b < n; ++b) {
    vsum += s.l2[b];
    vsq += s.l2[b] * s.l2[b];
    l1sum += s.l1[b];
  }
  double beta = 1;
  switch (c.beta) {
    case CoeffId::Uniform: beta = 1; break;
    case CoeffId::GlobalSum: beta = g(vsum); break;
    case CoeffId::Frobenius: beta = g(std::sqrt(vsq)); break;
    case CoeffId::GlobalMean: beta = double(n) * g(vsum); break;
    case CoeffId::RowWise: beta = g(s.l1[j]); break;
    case CoeffId::ColWise: beta = g(l1sum); break;
    case CoeffId::Relative: beta = g(vsum) + g(s.l2[j]); break;
  }
  double f2;
  if (c.f2 == TransformId::Softmax) {
    double z = 0;
    for (std::size_t b = 0; b < n; ++b) z += std::exp(s.l2[b]);
    f2 = std::exp(s.l2[j]) / z;
  } else {
    f2 = elementwise(s.l2[j], c.f2);
  }
  return alpha * f1 * beta * f2;
}

TEST(MetricTest, AllConfigsMatchReferenceEvaluation) {
  Rng rng(11);
  const Matrix w = testing::random_matrix(rng, 3, 4, -2.0, 2.0);
  SubModuleStats s;
  s.l2 = Vector{0.7, 2.5, 1.1, 3.0};
  s.l1 = Vector{1.2, 4.0, 1.5, 5.5};
  s.token_count = 4;
  for (std::size_t k = 0; k < kMetricSpaceSize; ++k) {
    const MetricConfig c = MetricConfig::from_index(k);
    const Matrix sc = score(w, s, c);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const double ref = reference_entry(w, s, c, i, j);
        ASSERT_LE(std::fabs(sc(i, j) - ref), 1e-12 * std::max(1.0, std::fabs(ref)))
            << c.to_string() << " at " << i << "," << j;
      }
    }
  }
}

}  // namespace
}  // namespace prunesearch
