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


// Hyperband-style search: uniform random configurations over a discrete and
// interval space, pruned by successive halving on validation RMSE.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "efbg/nn.hpp"
#include "efbg/optics.hpp"

namespace efbg {

struct IntRange {
  int min = 1;
  int max = 20;
};

struct RealRange {
  double min = 0;
  double max = 0;
};

/// Ranges are inclusive; a range with min == max or a one-entry menu pins
/// that dimension.
struct SearchSpace {
  IntRange n_conv{1, 20};
  IntRange n_fc{1, 20};
  std::vector<bool> bn_per_layer{false, true};
  std::vector<bool> dropout_after_fc{false, true};
  RealRange dropout_rate{0.1, 0.8};
  std::vector<std::size_t> stride{1, 2};
  std::vector<std::size_t> pool_kernel{2, 3};
  std::vector<nn::InitScheme> init_scheme{nn::InitScheme::kStandard, nn::InitScheme::kXavierUniform,
                                          nn::InitScheme::kXavierNormal, nn::InitScheme::kKaimingUniform,
                                          nn::InitScheme::kKaimingNormal};
  std::vector<double> learning_rate{1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<bool> sort_conv{false, true};
  std::vector<double> l2{0.1, 0.01, 0.001, 0.0001, 0.00001, 0.0};
  RealRange smooth_l1_beta{0.0, 5.0};
  std::vector<std::size_t> conv_channels{16, 32, 64, 128, 256};
  std::size_t fc_units = 256;

  void validate() const;
};

/// One point of the space.
struct TrialConfig {
  std::vector<std::size_t> conv_channels;  // n_conv entries
  int n_fc = 1;
  bool bn_per_layer = false;
  bool dropout_after_fc = false;
  double dropout_rate = 0.1;
  std::size_t stride = 1;
  std::size_t pool_kernel = 2;
  nn::InitScheme init_scheme = nn::InitScheme::kXavierNormal;
  double learning_rate = 1e-4;
  bool sort_conv = false;
  double l2 = 0;
  double smooth_l1_beta = 4.04;
  std::size_t fc_units = 256;

  bool operator==(const TrialConfig&) const = default;

  /// Conv blocks (Conv, optional BN, ReLU, MaxPool) then hidden FC blocks
  /// (Dense, ReLU, optional BN, optional Dropout) and the output layer.
  /// Stride and pooling are skipped once they would shrink the sequence
  /// below two elements.
  nn::ModelConfig model_config() const;
  /// `base` supplies batch size, epochs, seed and precision.
  nn::TrainConfig train_config(const nn::TrainConfig& base) const;
};

bool space_contains(const SearchSpace& space, const TrialConfig& cfg);

/// Uniform draw per dimension; channels per conv layer drawn from the
/// channel menu and sorted non-decreasing when sort_conv is drawn true.
TrialConfig sample_config(const SearchSpace& space, Rng& rng);

/// The selected tuned configuration (5 conv, 5 FC, xavier_normal, lr 1e-4,
/// l2 0, beta 4.04).
TrialConfig selected_trial_config(std::size_t fc_units = 256);

enum class TrialStatus { kOk, kDiverged };

const char* trial_status_name(TrialStatus s) noexcept;

struct RungResult {
  std::size_t epochs = 0;  // cumulative
  double val_loss = 0;     // SmoothL1 with the trial's own beta
  double val_rmse_mm = 0;  // ranking metric
};

struct TrialRecord {
  std::size_t index = 0;
  std::size_t bracket = 0;
  TrialConfig config;
  TrialStatus status = TrialStatus::kOk;
  std::size_t epochs = 0;  // resource spent
  double val_loss = 0;
  double val_rmse_mm = 0;
  std::vector<RungResult> history;
};

/// Trains (or continues training) trial `index` up to `epochs` cumulative
/// epochs. Throws Error(kDiverged) when the run diverges.
using TrialRunner =
    std::function<RungResult(std::size_t index, const TrialConfig& config, std::size_t epochs)>;

struct HalvingResult {
  std::vector<std::size_t> survivors;          // indices into the input configs
  std::vector<std::vector<std::size_t>> rungs;  // trials evaluated per round
  std::vector<std::size_t> rung_epochs;
  std::vector<TrialRecord> trials;
};

/// Rounds with resource r, r eta, ... ending at max_epochs; each round keeps
/// the best ceil(n / eta) by validation RMSE, diverged trials ranked last.
/// `rounds` caps the schedule (0 runs until one survivor). Throws
/// kSearchFailed when every trial of a round diverged.
HalvingResult successive_halving(std::span<const TrialConfig> configs, std::size_t eta,
                                 std::size_t max_epochs, const TrialRunner& runner,
                                 std::size_t first_index = 0, std::size_t bracket = 0,
                                 std::size_t rounds = 0);

/// Ceil-division schedule: {n, ceil(n/eta), ...} down to one survivor.
std::vector<std::size_t> halving_round_sizes(std::size_t n, std::size_t eta);

struct SearchOptions {
  std::size_t n_configs = 9;
  std::size_t eta = 3;
  std::size_t max_epochs = 9;
  bool multi_bracket = false;
  std::uint64_t seed = 1;
  nn::TrainConfig base;  // batch size, precision

  void validate() const;
};

struct SearchResult {
  TrialRecord best;
  std::vector<TrialRecord> trials;
};

/// Trains each trial on `train` and ranks on `val`. Trial RNGs derive from
/// (seed, trial index). Each finished trial is written to `log` as one JSON
/// line when given.
SearchResult run_search(const SearchSpace& space, std::span<const SampleRecord> train,
                        std::span<const SampleRecord> val, const SearchOptions& options,
                        std::ostream* log = nullptr);

/// Same schedule with a caller-supplied runner.
SearchResult run_search(const SearchSpace& space, const SearchOptions& options,
                        const TrialRunner& runner, std::ostream* log = nullptr);

std::string trial_record_json(const TrialRecord& record);

}  // namespace efbg
