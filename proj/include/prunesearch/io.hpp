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

// File formats. All multi-byte integers are little-endian.
//
// OPSH tensor container (models and masks):
//
//   magic        4 bytes  "OPSH"
//   version      u32      1
//   header_len   u32
//   header       header_len bytes of UTF-8 JSON (the model config for
//                models, {"content":"masks"} for masks)
//   tensor_count u32
//   per tensor:
//     name_len u16, name (UTF-8)
//     ndim     u8, dims u32 x ndim
//     dtype    u8 (0 = float32, 1 = uint8)
//     payload  row-major, product(dims) elements
//
// Weights are stored as float32 and computed on as float64, so a model
// written and read back is exact at 32-bit precision.
//
// Calibration: one JSON object per line, {"tokens":[...]}.
// Stats: JSON object keyed by sub-module name, each {"v","l1","token_count"}.
// Results: JSON trial log, or CSV with columns trial,alpha,beta,f1,f2,l_div.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prunesearch/calibration.hpp"
#include "prunesearch/model.hpp"
#include "prunesearch/prune.hpp"
#include "prunesearch/search.hpp"

namespace prunesearch {

inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { F32 = 0, U8 = 1 };

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  DType dtype = DType::F32;
  std::vector<float> f32;          ///< payload when dtype == F32
  std::vector<std::uint8_t> u8;    ///< payload when dtype == U8

  std::size_t element_count() const;
};

struct Container {
  std::string header;  ///< JSON text
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> encode_container(const Container& c);
/// Throws IoError on bad magic, version mismatch, truncation, duplicate
/// names, unknown dtypes or trailing bytes.
Container decode_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_model(const ModelWeights& w);
ModelWeights decode_model(std::span<const std::uint8_t> bytes);
void write_model(const std::filesystem::path& path, const ModelWeights& w);
ModelWeights read_model(const std::filesystem::path& path);

std::string encode_calib(const CalibrationSet& calib);
CalibrationSet decode_calib(const std::string& text);
void write_calib(const std::filesystem::path& path, const CalibrationSet& calib);
CalibrationSet read_calib(const std::filesystem::path& path);

std::string encode_stats(const ActivationStats& stats);
ActivationStats decode_stats(const std::string& text);
void write_stats(const std::filesystem::path& path, const ActivationStats& stats);
ActivationStats read_stats(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_masks(const MaskSet& masks);
MaskSet decode_masks(std::span<const std::uint8_t> bytes);
void write_masks(const std::filesystem::path& path, const MaskSet& masks);
MaskSet read_masks(const std::filesystem::path& path);

std::string results_json(const SearchResult& result);
std::string results_csv(const SearchResult& result);
std::string table_json(const std::vector<TableRow>& table);
std::string table_csv(const std::vector<TableRow>& table);
/// CSV when the path ends in ".csv", JSON otherwise.
void write_results(const std::filesystem::path& path, const SearchResult& result);
void write_table(const std::filesystem::path& path,
                 const std::vector<TableRow>& table);

/// Shortest decimal form that reads back to the same double.
std::string format_real(double x);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace prunesearch
