// Copyright 2026 The edgefbg Authors. All Rights Reserved.
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


// Persistent formats. Binary files are little-endian: an 8-byte magic, a
// u32 version, a u64-length JSON header, the payload and a trailing
// FNV-1a 64 checksum over everything before it.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "efbg/baseline.hpp"
#include "efbg/dictionary.hpp"
#include "efbg/nn.hpp"
#include "efbg/optics.hpp"

namespace efbg {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr std::uint32_t kDictionaryFormatVersion = 1;

/// Fixed per-record size in a dataset file, bytes.
std::size_t dataset_record_bytes() noexcept;

std::string encode_dataset(const Dataset& ds);
/// Validates magic, version, header, record count and checksum before
/// decoding any record. Throws kIo on any mismatch.
Dataset decode_dataset(const std::string& bytes);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Spectra and shape columns, one row per record.
void write_dataset_csv(const Dataset& ds, std::ostream& out);

struct CheckpointMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double best_val_rmse_mm = 0;
};

/// Model config, shape trace, precision, metadata, then all parameters and
/// buffers as f64 in layer order, then the Adam moments when an optimizer is
/// given.
template <typename T>
std::string encode_checkpoint(nn::Model<T>& model, const CheckpointMeta& meta,
                              const nn::Adam<T>* optimizer = nullptr);
template <typename T>
void save_checkpoint(nn::Model<T>& model, const CheckpointMeta& meta, const std::string& path,
                     const nn::Adam<T>* optimizer = nullptr);

struct LoadedCheckpoint {
  nn::ModelConfig config;
  bool float64 = false;
  CheckpointMeta meta;
  std::vector<double> values;  // parameters then buffers
  bool has_optimizer = false;
  nn::AdamOptions adam;
  std::uint64_t adam_steps = 0;
  std::vector<double> first_moments, second_moments;  // flattened like the parameters

  /// Builds a model of precision T and copies the stored values into it.
  template <typename T>
  nn::Model<T> instantiate() const;
  /// Optimizer with the stored moments; fresh when none was saved.
  template <typename T>
  nn::Adam<T> restore_optimizer(nn::Model<T>& model) const;
};

LoadedCheckpoint decode_checkpoint(const std::string& bytes);
LoadedCheckpoint load_checkpoint(const std::string& path);

std::string calibration_json(const BlCalibration& calib);
BlCalibration parse_calibration(const std::string& text);
void save_calibration(const BlCalibration& calib, const std::string& path);
BlCalibration load_calibration(const std::string& path);

/// Entries (features and shapes) plus the norm sidecar, which is checked
/// against recomputed norms on load.
std::string encode_dictionary(const SpectrumDictionary& dict);
SpectrumDictionary decode_dictionary(const std::string& bytes);
void save_dictionary(const SpectrumDictionary& dict, const std::string& path);
SpectrumDictionary load_dictionary(const std::string& path);

std::string read_file(const std::string& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, const std::string& bytes);

/// CSV report: '#'-prefixed provenance lines (report name, config hash,
/// seeds), a header row and data rows. Numbers use %.6f unless given as text.
class CsvReport {
 public:
  CsvReport(std::string name, std::string config_hash,
            std::vector<std::pair<std::string, std::uint64_t>> seeds, std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  static std::string num(double v, int precision = 6);
  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::string name_, hash_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace efbg
