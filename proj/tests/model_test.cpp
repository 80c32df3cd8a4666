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

#include "prunesearch/calibration.hpp"
#include "prunesearch/error.hpp"
#include "prunesearch/model.hpp"
#include "support.hpp"

namespace prunesearch {
namespace {

using testing::tiny_calib;
using testing::tiny_model;

TEST(ModelTest, InitIsDeterministic) {
  const ModelConfig c;
  EXPECT_EQ(init_model(c, 42), init_model(c, 42));
}

TEST(ModelTest, DifferentSeedsDiffer) {
  const ModelConfig c;
  EXPECT_FALSE(init_model(c, 42) == init_model(c, 43));
}

TEST(ModelTest, HeadDim) {
  ModelConfig c;
  c.d_model = 32;
  c.n_heads = 4;
  EXPECT_EQ(c.head_dim(), 8u);
}

TEST(ModelTest, ConfigValidation) {
  ModelConfig c;
  c.n_heads = 5;
  EXPECT_THROW(c.validate(), Error);
  c = ModelConfig{};
  c.n_layers = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(ModelConfig{}.validate());
}

TEST(ModelTest, WeightShapesAreOutputByInput) {
  const ModelConfig c;
  const ModelWeights w = init_model(c, 1);
  ASSERT_EQ(w.layers.size(), c.n_layers);
  EXPECT_EQ(w.num_prunable(), 7 * c.n_layers);
  const auto& l = w.layers[0];
  EXPECT_EQ(l.q.rows(), c.d_model);
  EXPECT_EQ(l.q.cols(), c.d_model);
  EXPECT_EQ(l.gate.rows(), c.d_ff);
  EXPECT_EQ(l.gate.cols(), c.d_model);
  EXPECT_EQ(l.up.rows(), c.d_ff);
  EXPECT_EQ(l.down.rows(), c.d_model);
  EXPECT_EQ(l.down.cols(), c.d_ff);
  EXPECT_EQ(w.token_embedding.rows(), c.vocab_size);
  EXPECT_EQ(w.position_embedding.rows(), c.max_seq_len);
  EXPECT_EQ(&l.linear(SubModule::down), &l.down);
  EXPECT_EQ(sub_module_name(1, SubModule::gate), "layer.1.gate");
}

TEST(ModelTest, InitStatisticsLookNormal) {
  const ModelWeights w = init_model(ModelConfig{}, 9);
  double s = 0.0, s2 = 0.0;
  const auto vals = w.token_embedding.values();
  for (double x : vals) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(vals.size());
  EXPECT_NEAR(s / n, 0.0, 0.003);
  EXPECT_NEAR(std::sqrt(s2 / n), 0.02, 0.002);
  for (std::size_t j = 0; j < w.final_norm.size(); ++j) EXPECT_EQ(w.final_norm[j], 1.0);
}

TEST(ModelTest, RmsNormUnitGainGivesUnitRms) {
  const Matrix x{{3, 4}, {1, -1}};
  const Matrix y = rms_norm(x, Vector{1, 1});
  for (std::size_t i = 0; i < 2; ++i) {
    const double ms = (y(i, 0) * y(i, 0) + y(i, 1) * y(i, 1)) / 2.0;
    EXPECT_NEAR(ms, 1.0, 1e-5);
  }
  // Row [3,4]: rms = sqrt(12.5 + eps).
  EXPECT_NEAR(y(0, 0), 3.0 / std::sqrt(12.5 + kRmsNormEps), 1e-15);
}

TEST(ModelTest, CausalSoftmaxRowsAndMask) {
  const Matrix logits{{1, 5, 9}, {2, 0, 7}, {0.5, -1, 3}};
  const Matrix p = causal_softmax(logits);
  for (std::size_t t = 0; t < 3; ++t) {
    double row = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      if (s > t) {
        EXPECT_EQ(p(t, s), 0.0);
      }
      row += p(t, s);
    }
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
  EXPECT_EQ(p(0, 0), 1.0);
  EXPECT_NEAR(p(1, 0), std::exp(2.0) / (std::exp(2.0) + 1.0), 1e-15);
}

TEST(ModelTest, Silu) {
  EXPECT_EQ(silu(0.0), 0.0);
  EXPECT_NEAR(silu(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(ModelTest, ForwardShapesAndCapture) {
  const ModelWeights w = tiny_model();
  const TokenSequence tokens{1, 2, 3, 4, 5};
  const ForwardTrace plain = forward(w, tokens);
  EXPECT_EQ(plain.final_hidden.rows(), tokens.size());
  EXPECT_EQ(plain.final_hidden.cols(), w.config.d_model);
  EXPECT_TRUE(plain.captured_inputs.empty());

  const ForwardTrace traced = forward(w, tokens, true);
  ASSERT_EQ(traced.captured_inputs.size(), 7 * w.config.n_layers);
  EXPECT_EQ(traced.captured_inputs[0].cols(), w.config.d_model);
  EXPECT_EQ(traced.captured_inputs[6].cols(), w.config.d_ff);
  EXPECT_EQ(traced.final_hidden, plain.final_hidden);
}

TEST(ModelTest, AttentionRowsSumToOne) {
  const ModelWeights w = tiny_model();
  const TokenSequence tokens{7, 0, 3, 3, 15, 2};
  const ForwardTrace t = forward(w, tokens, true);
  ASSERT_EQ(t.attention_probs.size(), w.config.n_layers * w.config.n_heads);
  for (const Matrix& p : t.attention_probs) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < p.cols(); ++c) {
        if (c > r) {
          EXPECT_EQ(p(r, c), 0.0);
        }
        s += p(r, c);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(ModelTest, ForwardIsCausal) {
  // Changing a later token must not change earlier hidden rows.
  const ModelWeights w = tiny_model();
  const ForwardTrace a = forward(w, TokenSequence{1, 2, 3, 4});
  const ForwardTrace b = forward(w, TokenSequence{1, 2, 3, 9});
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < w.config.d_model; ++j) {
      EXPECT_EQ(a.final_hidden(t, j), b.final_hidden(t, j));
    }
  }
  bool last_differs = false;
  for (std::size_t j = 0; j < w.config.d_model; ++j) {
    last_differs |= a.final_hidden(3, j) != b.final_hidden(3, j);
  }
  EXPECT_TRUE(last_differs);
}

TEST(ModelTest, ForwardDeterministic) {
  const ModelWeights w = tiny_model();
  const TokenSequence tokens{4, 8, 15, 1};
  EXPECT_EQ(forward(w, tokens).final_hidden, forward(w, tokens).final_hidden);
}

TEST(ModelTest, ForwardRejectsBadInput) {
  const ModelWeights w = tiny_model();
  EXPECT_THROW(forward(w, TokenSequence{}), Error);
  EXPECT_THROW(forward(w, TokenSequence{16}), Error);
  EXPECT_THROW(forward(w, TokenSequence(17, 1)), Error);
}

TEST(ModelTest, BatchMatchesSequences) {
  const ModelWeights w = tiny_model();
  CalibrationSet calib = tiny_calib();
  const auto hidden = final_hidden_batch(w, calib);
  ASSERT_EQ(hidden.size(), calib.sequences.size());
  std::reverse(calib.sequences.begin(), calib.sequences.end());
  const auto reversed = final_hidden_batch(w, calib);
  for (std::size_t s = 0; s < hidden.size(); ++s) {
    EXPECT_EQ(hidden[s], reversed[hidden.size() - 1 - s]);
  }
  EXPECT_THROW(final_hidden_batch(w, CalibrationSet{}), Error);
}

TEST(ModelTest, FixtureBatchHasEightBlocks) {
  EXPECT_EQ(final_hidden_batch(testing::fixture_model(), testing::fixture_calib()).size(),
            8u);
}

}  // namespace
}  // namespace prunesearch
