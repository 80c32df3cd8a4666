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

#include "prunesearch/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prunesearch/error.hpp"

namespace prunesearch {

using nlohmann::json;

namespace {

constexpr std::uint8_t kMagic[4] = {'O', 'P', 'S', 'H'};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int s = 0; s < 16; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(const std::string& s) {
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw IoError(std::string("truncated payload while reading ") + what);
    }
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8(const char* what) { return take(1, what)[0]; }
  std::uint16_t u16(const char* what) {
    auto b = take(2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::string text(std::size_t n, const char* what) {
    auto b = take(n, what);
    return std::string(b.begin(), b.end());
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

NamedTensor f32_tensor(std::string name, const Matrix& m) {
  NamedTensor t{std::move(name),
                {static_cast<std::uint32_t>(m.rows()),
                 static_cast<std::uint32_t>(m.cols())},
                DType::F32, {}, {}};
  t.f32.reserve(m.size());
  for (double x : m.values()) t.f32.push_back(static_cast<float>(x));
  return t;
}

NamedTensor f32_tensor(std::string name, const Vector& v) {
  NamedTensor t{std::move(name), {static_cast<std::uint32_t>(v.size())},
                DType::F32, {}, {}};
  t.f32.reserve(v.size());
  for (double x : v.values()) t.f32.push_back(static_cast<float>(x));
  return t;
}

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
              {"n_layers", c.n_layers},     {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},             {"max_seq_len", c.max_seq_len}};
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(what + ": malformed JSON: " + e.what());
  }
}

std::size_t require_count(const json& obj, const char* key,
                          const std::string& path) {
  if (!obj.contains(key)) throw IoError(path + "." + key + ": missing");
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw IoError(path + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

ModelConfig config_from_json(const json& j) {
  if (!j.is_object()) throw IoError("model header: expected a JSON object");
  static const std::set<std::string> kKeys = {"vocab_size", "d_model",
                                              "n_layers",   "n_heads",
                                              "d_ff",       "max_seq_len"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw IoError("model header." + key + ": unexpected key");
  }
  ModelConfig c;
  c.vocab_size = require_count(j, "vocab_size", "model header");
  c.d_model = require_count(j, "d_model", "model header");
  c.n_layers = require_count(j, "n_layers", "model header");
  c.n_heads = require_count(j, "n_heads", "model header");
  c.d_ff = require_count(j, "d_ff", "model header");
  c.max_seq_len = require_count(j, "max_seq_len", "model header");
  try {
    c.validate();
  } catch (const Error& e) {
    throw IoError(std::string("model header: ") + e.what());
  }
  return c;
}

std::vector<double> real_array(const json& obj, const char* key,
                               const std::string& path) {
  const std::string here = path + "." + key;
  if (!obj.contains(key)) throw IoError(here + ": missing");
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw IoError(here + ": expected an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& v = arr[i];
    if (!v.is_number()) {
      throw IoError(here + "[" + std::to_string(i) + "]: expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < 0.0) {
      throw IoError(here + "[" + std::to_string(i) +
                    "]: expected a finite non-negative number");
    }
    out.push_back(x);
  }
  return out;
}

json trial_json(const Trial& t) {
  return json{{"trial", t.index},
              {"alpha", to_string(t.config.alpha)},
              {"beta", to_string(t.config.beta)},
              {"f1", to_string(t.config.f1)},
              {"f2", to_string(t.config.f2)},
              {"l_div", t.l_div},
              {"cached", t.cached},
              {"generation", t.generation}};
}

std::string csv_row(std::size_t index, const MetricConfig& c, double l_div) {
  std::string row = std::to_string(index);
  row += ',';
  row += c.to_string();
  row += ',';
  row += format_real(l_div);
  row += '\n';
  return row;
}

bool is_csv(const std::filesystem::path& path) {
  return path.extension() == ".csv";
}

}  // namespace

std::size_t NamedTensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_container(const Container& c) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(c.header.size()));
  w.text(c.header);
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  std::set<std::string> names;
  for (const auto& t : c.tensors) {
    if (!names.insert(t.name).second) {
      throw IoError("duplicate tensor name '" + t.name + "'");
    }
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw IoError("tensor name too long");
    }
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.text(t.name);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    w.u8(static_cast<std::uint8_t>(t.dtype));
    const std::size_t n = t.element_count();
    if (t.dtype == DType::F32) {
      if (t.f32.size() != n) throw IoError(t.name + ": payload length mismatch");
      for (float x : t.f32) w.u32(std::bit_cast<std::uint32_t>(x));
    } else {
      if (t.u8.size() != n) throw IoError(t.name + ": payload length mismatch");
      w.bytes(t.u8);
    }
  }
  return std::move(w).take();
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw IoError("bad magic: not an OPSH container");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kContainerVersion) {
    throw IoError("version mismatch: file has " + std::to_string(version) +
                  ", expected " + std::to_string(kContainerVersion));
  }
  Container c;
  c.header = r.text(r.u32("header length"), "header");
  const std::uint32_t count = r.u32("tensor count");
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.text(r.u16("name length"), "tensor name");
    if (!names.insert(t.name).second) {
      throw IoError("duplicate tensor name '" + t.name + "'");
    }
    const std::uint8_t ndim = r.u8("ndim");
    for (std::uint8_t d = 0; d < ndim; ++d) t.dims.push_back(r.u32("dims"));
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype > static_cast<std::uint8_t>(DType::U8)) {
      throw IoError(t.name + ": unknown dtype " + std::to_string(dtype));
    }
    t.dtype = static_cast<DType>(dtype);
    const std::size_t n = t.element_count();
    if (t.dtype == DType::F32) {
      auto payload = r.take(n * 4, "tensor payload");
      t.f32.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t bits =
            static_cast<std::uint32_t>(payload[4 * k]) |
            (static_cast<std::uint32_t>(payload[4 * k + 1]) << 8) |
            (static_cast<std::uint32_t>(payload[4 * k + 2]) << 16) |
            (static_cast<std::uint32_t>(payload[4 * k + 3]) << 24);
        t.f32[k] = std::bit_cast<float>(bits);
      }
    } else {
      auto payload = r.take(n, "tensor payload");
      t.u8.assign(payload.begin(), payload.end());
    }
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw IoError("trailing bytes after last tensor");
  return c;
}

std::vector<std::uint8_t> encode_model(const ModelWeights& w) {
  validate_weights(w);
  Container c;
  c.header = config_to_json(w.config).dump();
  c.tensors.push_back(f32_tensor("token_embedding", w.token_embedding));
  c.tensors.push_back(f32_tensor("position_embedding", w.position_embedding));
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& layer = w.layers[l];
    for (SubModule sm : kAllSubModules) {
      c.tensors.push_back(f32_tensor(sub_module_name(l, sm), layer.linear(sm)));
    }
    const std::string prefix = "layer." + std::to_string(l);
    c.tensors.push_back(f32_tensor(prefix + ".attn_norm", layer.attn_norm));
    c.tensors.push_back(f32_tensor(prefix + ".mlp_norm", layer.mlp_norm));
  }
  c.tensors.push_back(f32_tensor("final_norm", w.final_norm));
  return encode_container(c);
}

ModelWeights decode_model(std::span<const std::uint8_t> bytes) {
  Container c = decode_container(bytes);
  const ModelConfig config =
      config_from_json(parse_json(c.header, "model header"));

  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : c.tensors) {
    if (t.dtype != DType::F32) throw IoError(t.name + ": expected float32 dtype");
    by_name.emplace(t.name, &t);
  }
  std::size_t consumed = 0;
  auto fetch = [&](const std::string& name,
                   std::vector<std::uint32_t> dims) -> std::vector<double> {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError("missing tensor '" + name + "'");
    if (it->second->dims != dims) {
      throw IoError(name + ": unexpected dims for the model config");
    }
    ++consumed;
    const auto& src = it->second->f32;
    std::vector<double> out(src.begin(), src.end());
    for (double x : out) {
      if (!std::isfinite(x)) throw IoError(name + ": non-finite value");
    }
    return out;
  };
  auto matrix = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols,
                  fetch(name, {static_cast<std::uint32_t>(rows),
                               static_cast<std::uint32_t>(cols)}));
  };
  auto vector = [&](const std::string& name, std::size_t len) {
    return Vector(fetch(name, {static_cast<std::uint32_t>(len)}));
  };

  const std::size_t d = config.d_model;
  const std::size_t ff = config.d_ff;
  Matrix tok = matrix("token_embedding", config.vocab_size, d);
  Matrix pos = matrix("position_embedding", config.max_seq_len, d);
  std::vector<LayerWeights> layers;
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string prefix = "layer." + std::to_string(l);
    layers.push_back(LayerWeights{
        matrix(prefix + ".q", d, d), matrix(prefix + ".k", d, d),
        matrix(prefix + ".v", d, d), matrix(prefix + ".o", d, d),
        matrix(prefix + ".gate", ff, d), matrix(prefix + ".up", ff, d),
        matrix(prefix + ".down", d, ff), vector(prefix + ".attn_norm", d),
        vector(prefix + ".mlp_norm", d)});
  }
  Vector final_norm = vector("final_norm", d);
  if (consumed != c.tensors.size()) {
    throw IoError("model file holds unexpected extra tensors");
  }
  return ModelWeights{config, std::move(tok), std::move(pos), std::move(layers),
                      std::move(final_norm)};
}

void write_model(const std::filesystem::path& path, const ModelWeights& w) {
  write_file(path, encode_model(w));
}

ModelWeights read_model(const std::filesystem::path& path) {
  try {
    return decode_model(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string encode_calib(const CalibrationSet& calib) {
  std::string out;
  for (const auto& seq : calib.sequences) {
    out += json{{"tokens", seq}}.dump();
    out += '\n';
  }
  return out;
}

CalibrationSet decode_calib(const std::string& text) {
  CalibrationSet calib;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "calibration line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw IoError(where + ": malformed line");
    }
    if (!j.is_object() || !j.contains("tokens") || !j.at("tokens").is_array() ||
        j.size() != 1) {
      throw IoError(where + ": expected {\"tokens\":[...]}");
    }
    TokenSequence seq;
    for (const json& t : j.at("tokens")) {
      if (!t.is_number_unsigned() ||
          t.get<std::uint64_t>() > std::numeric_limits<TokenId>::max()) {
        throw IoError(where + ": tokens must be non-negative 32-bit integers");
      }
      seq.push_back(t.get<TokenId>());
    }
    if (seq.empty()) throw IoError(where + ": empty token sequence");
    calib.sequences.push_back(std::move(seq));
  }
  if (calib.sequences.empty()) throw IoError("empty calibration set");
  return calib;
}

void write_calib(const std::filesystem::path& path, const CalibrationSet& calib) {
  write_file(path, encode_calib(calib));
}

CalibrationSet read_calib(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_calib(std::string(bytes.begin(), bytes.end()));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string encode_stats(const ActivationStats& stats) {
  json j = json::object();
  for (const auto& [name, s] : stats) {
    j[name] = json{{"v", std::vector<double>(s.l2.values().begin(), s.l2.values().end())},
                   {"l1", std::vector<double>(s.l1.values().begin(), s.l1.values().end())},
                   {"token_count", s.token_count}};
  }
  return j.dump(1) + "\n";
}

ActivationStats decode_stats(const std::string& text) {
  const json j = parse_json(text, "stats");
  if (!j.is_object()) throw IoError("stats: expected a JSON object");
  ActivationStats stats;
  for (const auto& [name, entry] : j.items()) {
    const std::string path = "stats." + name;
    if (!entry.is_object()) throw IoError(path + ": expected an object");
    for (const auto& [key, _] : entry.items()) {
      if (key != "v" && key != "l1" && key != "token_count") {
        throw IoError(path + "." + key + ": unexpected key");
      }
    }
    std::vector<double> v = real_array(entry, "v", path);
    std::vector<double> l1 = real_array(entry, "l1", path);
    if (v.size() != l1.size()) {
      throw IoError(path + ": v and l1 lengths differ");
    }
    const std::size_t tokens = require_count(entry, "token_count", path);
    stats.emplace(name, SubModuleStats{Vector(std::move(v)), Vector(std::move(l1)),
                                       tokens});
  }
  return stats;
}

void write_stats(const std::filesystem::path& path, const ActivationStats& stats) {
  write_file(path, encode_stats(stats));
}

ActivationStats read_stats(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_stats(std::string(bytes.begin(), bytes.end()));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_masks(const MaskSet& masks) {
  Container c;
  c.header = json{{"content", "masks"}}.dump();
  for (const auto& [name, m] : masks) {
    NamedTensor t{name,
                  {static_cast<std::uint32_t>(m.rows),
                   static_cast<std::uint32_t>(m.cols)},
                  DType::U8, {}, m.bits};
    c.tensors.push_back(std::move(t));
  }
  return encode_container(c);
}

MaskSet decode_masks(std::span<const std::uint8_t> bytes) {
  Container c = decode_container(bytes);
  const json header = parse_json(c.header, "mask header");
  if (header != json{{"content", "masks"}}) {
    throw IoError("mask header: expected {\"content\":\"masks\"}");
  }
  MaskSet masks;
  for (auto& t : c.tensors) {
    if (t.dtype != DType::U8) throw IoError(t.name + ": expected uint8 dtype");
    if (t.dims.size() != 2) throw IoError(t.name + ": expected 2 dims");
    for (auto b : t.u8) {
      if (b > 1) throw IoError(t.name + ": mask flags must be 0 or 1");
    }
    Mask m;
    m.rows = t.dims[0];
    m.cols = t.dims[1];
    m.bits = std::move(t.u8);
    masks.emplace(t.name, std::move(m));
  }
  return masks;
}

void write_masks(const std::filesystem::path& path, const MaskSet& masks) {
  write_file(path, encode_masks(masks));
}

MaskSet read_masks(const std::filesystem::path& path) {
  try {
    return decode_masks(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string results_json(const SearchResult& result) {
  json trials = json::array();
  for (const auto& t : result.trials) trials.push_back(trial_json(t));
  const auto& b = result.best_config;
  json j{{"algorithm", result.algorithm},
         {"seed", result.seed},
         {"budget", result.budget},
         {"evaluations_used", result.evaluations_used},
         {"distinct_configs_evaluated", result.distinct_configs_evaluated},
         {"generations", result.generations},
         {"best",
          {{"alpha", to_string(b.alpha)},
           {"beta", to_string(b.beta)},
           {"f1", to_string(b.f1)},
           {"f2", to_string(b.f2)},
           {"l_div", result.best_l_div}}},
         {"trials", std::move(trials)}};
  return j.dump(1) + "\n";
}

std::string results_csv(const SearchResult& result) {
  std::string out = "trial,alpha,beta,f1,f2,l_div\n";
  for (const auto& t : result.trials) out += csv_row(t.index, t.config, t.l_div);
  return out;
}

std::string table_json(const std::vector<TableRow>& table) {
  json rows = json::array();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& c = table[i].config;
    rows.push_back(json{{"rank", i},
                        {"alpha", to_string(c.alpha)},
                        {"beta", to_string(c.beta)},
                        {"f1", to_string(c.f1)},
                        {"f2", to_string(c.f2)},
                        {"l_div", table[i].l_div}});
  }
  return json{{"table", std::move(rows)}}.dump(1) + "\n";
}

std::string table_csv(const std::vector<TableRow>& table) {
  std::string out = "trial,alpha,beta,f1,f2,l_div\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += csv_row(i, table[i].config, table[i].l_div);
  }
  return out;
}

void write_results(const std::filesystem::path& path, const SearchResult& result) {
  write_file(path, is_csv(path) ? results_csv(result) : results_json(result));
}

void write_table(const std::filesystem::path& path,
                 const std::vector<TableRow>& table) {
  write_file(path, is_csv(path) ? table_csv(table) : table_json(table));
}

std::string format_real(double x) { return json(x).dump(); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(text.data()),
                       text.size()));
}

}  // namespace prunesearch
