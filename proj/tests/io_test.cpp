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
#include <string>

#include "json.hpp"
#include "prunesearch/error.hpp"
#include "prunesearch/io.hpp"
#include "prunesearch/search.hpp"
#include "support.hpp"

namespace prunesearch {
namespace {

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

TEST(IoTest, ModelRoundTripIsStable) {
  const ModelWeights w = init_model(ModelConfig{}, 42);
  const auto bytes = encode_model(w);
  const ModelWeights back = decode_model(bytes);
  EXPECT_EQ(back.config, w.config);
  EXPECT_EQ(encode_model(back), bytes);
  // Values are stored as float32.
  EXPECT_EQ(back.layers[0].q(0, 0),
            static_cast<double>(static_cast<float>(w.layers[0].q(0, 0))));
}

TEST(IoTest, ModelFileRewriteIsIdentical) {
  testing::TempDir dir;
  write_model(dir.file("a.bin"), testing::fixture_model());
  write_model(dir.file("b.bin"), read_model(dir.file("a.bin")));
  EXPECT_EQ(read_file(dir.file("a.bin")), read_file(dir.file("b.bin")));
  EXPECT_EQ(read_model(dir.file("a.bin")), testing::fixture_model());
}

TEST(IoTest, ContainerHoldsNamedTensors) {
  const Container c = decode_container(encode_model(testing::fixture_model()));
  auto it = std::find_if(c.tensors.begin(), c.tensors.end(),
                         [](const NamedTensor& t) { return t.name == "layer.0.q"; });
  ASSERT_NE(it, c.tensors.end());
  EXPECT_EQ(it->dims, (std::vector<std::uint32_t>{32, 32}));
  const auto header = nlohmann::json::parse(c.header);
  EXPECT_EQ(header.at("d_model").get<int>(), 32);
}

TEST(IoTest, ContainerErrors) {
  auto bytes = encode_model(testing::tiny_model());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_TRUE(contains(error_of([&] { decode_container(bad); }), "bad magic"));
  bad = bytes;
  bad[4] = 9;
  EXPECT_TRUE(contains(error_of([&] { decode_container(bad); }), "version mismatch"));
  bad.assign(bytes.begin(), bytes.end() - 3);
  EXPECT_TRUE(contains(error_of([&] { decode_container(bad); }), "truncated"));
  bad = bytes;
  bad.push_back(0);
  EXPECT_TRUE(contains(error_of([&] { decode_container(bad); }), "trailing"));

  Container dup;
  dup.header = "{}";
  NamedTensor t;
  t.name = "a";
  t.dims = {1};
  t.f32 = {1.0f};
  dup.tensors = {t, t};
  EXPECT_TRUE(contains(error_of([&] { encode_container(dup); }), "duplicate"));
}

TEST(IoTest, ModelDecodeChecksTensors) {
  Container c = decode_container(encode_model(testing::tiny_model()));
  Container missing = c;
  missing.tensors.pop_back();
  EXPECT_TRUE(contains(error_of([&] { decode_model(encode_container(missing)); }),
                       "missing tensor"));
  Container wrong = c;
  wrong.tensors[2].dims = {1, 64};
  EXPECT_THROW(decode_model(encode_container(wrong)), IoError);
  EXPECT_THROW(read_model("/nonexistent/model.bin"), IoError);
}

TEST(IoTest, CalibrationRoundTrip) {
  const CalibrationSet& calib = testing::fixture_calib();
  const std::string text = encode_calib(calib);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
  EXPECT_EQ(decode_calib(text).sequences, calib.sequences);
  EXPECT_TRUE(contains(error_of([] { decode_calib(""); }), "empty calibration set"));
  EXPECT_TRUE(contains(error_of([] { decode_calib("{\"tokens\":[1,2]}\nnot json\n"); }),
                       "line 2"));
  EXPECT_THROW(decode_calib("{\"tokens\":[-1]}\n"), IoError);
}

TEST(IoTest, StatsRoundTripIsExact) {
  const ActivationStats& stats = testing::fixture_stats();
  EXPECT_EQ(decode_stats(encode_stats(stats)), stats);
  EXPECT_THROW(decode_stats("{\"x\":{\"v\":[-1],\"l1\":[1],\"token_count\":1}}"), IoError);
  EXPECT_THROW(decode_stats("{\"x\":{\"v\":[1]}}"), IoError);
  EXPECT_THROW(decode_stats("[]"), IoError);
}

TEST(IoTest, MaskRoundTrip) {
  const PruneResult r = prune_model(testing::fixture_model(), testing::fixture_stats(),
                                    preset("wanda"), Unstructured{0.5});
  const MaskSet back = decode_masks(encode_masks(r.masks));
  ASSERT_EQ(back.size(), r.masks.size());
  for (const auto& [name, m] : r.masks) {
    EXPECT_EQ(back.at(name).kept_count(), m.kept_count());
    EXPECT_EQ(back.at(name), m);
  }
  MaskSet bad;
  bad["m"] = Mask(1, 2, 1);
  bad["m"].bits[0] = 2;
  EXPECT_THROW(decode_masks(encode_masks(bad)), IoError);
}

TEST(IoTest, ResultsSerialization) {
  const EvalContext ctx = EvalContext::build(testing::tiny_model(), testing::tiny_calib(),
                                             Unstructured{0.5});
  const SearchResult r = random_search(ctx, 30, 2);
  const std::string csv = results_csv(r);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')),
            r.trials.size() + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial,alpha,beta,f1,f2,l_div");
  const auto j = nlohmann::json::parse(results_json(r));
  EXPECT_EQ(j.at("trials").size(), r.trials.size());
  EXPECT_EQ(j.at("best").at("l_div").get<double>(), r.best_l_div);
  EXPECT_EQ(j.at("evaluations_used").get<std::size_t>(), r.evaluations_used);
  EXPECT_FALSE(contains(results_json(r), "wall"));

  const std::vector<TableRow> table{{MetricConfig::from_index(5), 0.25},
                                    {MetricConfig::from_index(9), 0.5}};
  const auto t = nlohmann::json::parse(table_json(table));
  EXPECT_EQ(t.at("table").size(), 2u);
  EXPECT_EQ(t.at("table").at(1).at("l_div").get<double>(), 0.5);
  const std::string tcsv = table_csv(table);
  EXPECT_EQ(std::count(tcsv.begin(), tcsv.end(), '\n'), 3);
}

TEST(IoTest, FormatReal) {
  EXPECT_EQ(format_real(0.0), "0.0");
  EXPECT_EQ(format_real(1.0), "1.0");
  EXPECT_EQ(std::stod(format_real(0.1723570268845393)), 0.1723570268845393);
}

}  // namespace
}  // namespace prunesearch
