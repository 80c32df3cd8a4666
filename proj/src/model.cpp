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

#include "prunesearch/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "prunesearch/calibration.hpp"
#include "prunesearch/error.hpp"
#include "prunesearch/rng.hpp"

namespace prunesearch {

namespace {

constexpr double kInitStd = 0.02;

Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  boost::random::normal_distribution<double> normal(0.0, kInitStd);
  std::vector<double> data(rows * cols);
  for (double& x : data) x = normal(rng);
  return Matrix(rows, cols, std::move(data));
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                  const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(name + ": expected shape " + std::to_string(rows) + "x" +
                std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                "x" + std::to_string(m.cols()));
  }
  if (!all_finite(m.values())) throw Error(name + ": non-finite entry");
}

void expect_len(const Vector& v, std::size_t len, const std::string& name) {
  if (v.size() != len) {
    throw Error(name + ": expected length " + std::to_string(len) + ", got " +
                std::to_string(v.size()));
  }
  if (!all_finite(v.values())) throw Error(name + ": non-finite entry");
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 1 || d_model < 1 || n_layers < 1 || n_heads < 1 ||
      d_ff < 1 || max_seq_len < 1) {
    throw Error("model config: every dimension must be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw Error("model config: d_model (" + std::to_string(d_model) +
                ") not divisible by n_heads (" + std::to_string(n_heads) + ")");
  }
}

std::string_view to_string(SubModule sm) {
  switch (sm) {
    case SubModule::q: return "q";
    case SubModule::k: return "k";
    case SubModule::v: return "v";
    case SubModule::o: return "o";
    case SubModule::gate: return "gate";
    case SubModule::up: return "up";
    case SubModule::down: return "down";
  }
  return "?";
}

std::string sub_module_name(std::size_t layer, SubModule sm) {
  return "layer." + std::to_string(layer) + "." + std::string(to_string(sm));
}

const Matrix& LayerWeights::linear(SubModule sm) const {
  switch (sm) {
    case SubModule::q: return q;
    case SubModule::k: return k;
    case SubModule::v: return v;
    case SubModule::o: return o;
    case SubModule::gate: return gate;
    case SubModule::up: return up;
    case SubModule::down: return down;
  }
  throw Error("unknown sub-module");
}

Matrix& LayerWeights::linear(SubModule sm) {
  return const_cast<Matrix&>(std::as_const(*this).linear(sm));
}

bool ModelWeights::operator==(const ModelWeights& other) const {
  if (!(config == other.config) || token_embedding != other.token_embedding ||
      position_embedding != other.position_embedding ||
      final_norm != other.final_norm || layers.size() != other.layers.size()) {
    return false;
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& a = layers[l];
    const auto& b = other.layers[l];
    for (SubModule sm : kAllSubModules) {
      if (a.linear(sm) != b.linear(sm)) return false;
    }
    if (a.attn_norm != b.attn_norm || a.mlp_norm != b.mlp_norm) return false;
  }
  return true;
}

ModelWeights init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.d_model;
  const std::size_t ff = config.d_ff;

  Matrix tok = random_normal(config.vocab_size, d, rng);
  Matrix pos = random_normal(config.max_seq_len, d, rng);
  std::vector<LayerWeights> layers;
  layers.reserve(config.n_layers);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    Matrix q = random_normal(d, d, rng);
    Matrix k = random_normal(d, d, rng);
    Matrix v = random_normal(d, d, rng);
    Matrix o = random_normal(d, d, rng);
    Matrix gate = random_normal(ff, d, rng);
    Matrix up = random_normal(ff, d, rng);
    Matrix down = random_normal(d, ff, rng);
    layers.push_back(LayerWeights{std::move(q), std::move(k), std::move(v),
                                  std::move(o), std::move(gate), std::move(up),
                                  std::move(down), Vector(d, 1.0),
                                  Vector(d, 1.0)});
  }
  return ModelWeights{config, std::move(tok), std::move(pos),
                      std::move(layers), Vector(d, 1.0)};
}

void validate_weights(const ModelWeights& w) {
  const auto& c = w.config;
  c.validate();
  const std::size_t d = c.d_model;
  expect_shape(w.token_embedding, c.vocab_size, d, "token_embedding");
  expect_shape(w.position_embedding, c.max_seq_len, d, "position_embedding");
  expect_len(w.final_norm, d, "final_norm");
  if (w.layers.size() != c.n_layers) {
    throw Error("expected " + std::to_string(c.n_layers) + " layers, got " +
                std::to_string(w.layers.size()));
  }
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& layer = w.layers[l];
    for (SubModule sm : kAllSubModules) {
      const bool expands = sm == SubModule::gate || sm == SubModule::up;
      const std::size_t rows = expands ? c.d_ff : d;
      const std::size_t cols = sm == SubModule::down ? c.d_ff : d;
      expect_shape(layer.linear(sm), rows, cols, sub_module_name(l, sm));
    }
    const std::string prefix = "layer." + std::to_string(l);
    expect_len(layer.attn_norm, d, prefix + ".attn_norm");
    expect_len(layer.mlp_norm, d, prefix + ".mlp_norm");
  }
}

Matrix rms_norm(const Matrix& x, const Vector& gain) {
  if (gain.size() != x.cols()) throw Error("rms_norm: gain length mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    auto src = x.row(t);
    double ss = 0.0;
    for (double v : src) ss += v * v;
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(src.size()) +
                                       kRmsNormEps);
    auto dst = out.row(t);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] * inv * gain[j];
  }
  return out;
}

Matrix causal_softmax(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    const std::size_t visible = std::min(t + 1, logits.cols());
    auto src = logits.row(t);
    auto dst = probs.row(t);
    double mx = src[0];
    for (std::size_t s = 1; s < visible; ++s) mx = std::max(mx, src[s]);
    double total = 0.0;
    for (std::size_t s = 0; s < visible; ++s) {
      dst[s] = std::exp(src[s] - mx);
      total += dst[s];
    }
    for (std::size_t s = 0; s < visible; ++s) dst[s] /= total;
  }
  return probs;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

namespace {

// Multi-head causal self-attention over already-projected q, k, v.
Matrix attend(const Matrix& q, const Matrix& k, const Matrix& v,
              std::size_t n_heads, std::vector<Matrix>* probs_out) {
  const std::size_t T = q.rows();
  const std::size_t d = q.cols();
  const std::size_t hd = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Matrix out(T, d);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t off = h * hd;
    Matrix logits(T, T);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s <= t; ++s) {
        double acc = 0.0;
        for (std::size_t e = 0; e < hd; ++e) acc += q(t, off + e) * k(s, off + e);
        logits(t, s) = acc * scale;
      }
    }
    Matrix probs = causal_softmax(logits);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s <= t; ++s) {
        const double p = probs(t, s);
        for (std::size_t e = 0; e < hd; ++e) out(t, off + e) += p * v(s, off + e);
      }
    }
    if (probs_out) probs_out->push_back(std::move(probs));
  }
  return out;
}

void add_inplace(Matrix& x, const Matrix& delta) {
  auto dst = x.values();
  auto src = delta.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

ForwardTrace forward(const ModelWeights& w, std::span<const TokenId> tokens,
                     bool capture) {
  const auto& c = w.config;
  if (tokens.empty()) throw Error("forward: empty token sequence");
  if (tokens.size() > c.max_seq_len) {
    throw Error("forward: sequence length " + std::to_string(tokens.size()) +
                " exceeds max_seq_len " + std::to_string(c.max_seq_len));
  }
  const std::size_t T = tokens.size();
  const std::size_t d = c.d_model;

  Matrix x(T, d);
  for (std::size_t t = 0; t < T; ++t) {
    if (tokens[t] >= c.vocab_size) {
      throw Error("forward: token id " + std::to_string(tokens[t]) +
                  " out of range for vocab_size " +
                  std::to_string(c.vocab_size));
    }
    auto tok = w.token_embedding.row(tokens[t]);
    auto pos = w.position_embedding.row(t);
    auto dst = x.row(t);
    for (std::size_t j = 0; j < d; ++j) dst[j] = tok[j] + pos[j];
  }

  ForwardTrace trace{Matrix(T, d), {}, {}};
  if (capture) trace.captured_inputs.reserve(w.num_prunable());

  for (const auto& layer : w.layers) {
    Matrix h = rms_norm(x, layer.attn_norm);
    Matrix q = matmul_transposed(h, layer.q);
    Matrix k = matmul_transposed(h, layer.k);
    Matrix v = matmul_transposed(h, layer.v);
    Matrix attn = attend(q, k, v, c.n_heads,
                         capture ? &trace.attention_probs : nullptr);
    Matrix attn_out = matmul_transposed(attn, layer.o);
    add_inplace(x, attn_out);

    Matrix h2 = rms_norm(x, layer.mlp_norm);
    Matrix gate = matmul_transposed(h2, layer.gate);
    Matrix up = matmul_transposed(h2, layer.up);
    Matrix act = gate;
    {
      auto a = act.values();
      auto u = up.values();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = silu(a[i]) * u[i];
    }
    Matrix mlp_out = matmul_transposed(act, layer.down);
    add_inplace(x, mlp_out);

    if (capture) {
      trace.captured_inputs.push_back(h);       // q
      trace.captured_inputs.push_back(h);       // k
      trace.captured_inputs.push_back(h);       // v
      trace.captured_inputs.push_back(attn);    // o
      trace.captured_inputs.push_back(h2);      // gate
      trace.captured_inputs.push_back(h2);      // up
      trace.captured_inputs.push_back(act);     // down
    }
  }

  trace.final_hidden = rms_norm(x, w.final_norm);
  return trace;
}

std::vector<Matrix> final_hidden_batch(const ModelWeights& w,
                                       const CalibrationSet& calib) {
  calib.validate(w.config);
  std::vector<Matrix> out;
  out.reserve(calib.sequences.size());
  for (const auto& seq : calib.sequences) {
    out.push_back(forward(w, seq, false).final_hidden);
  }
  return out;
}

}  // namespace prunesearch
