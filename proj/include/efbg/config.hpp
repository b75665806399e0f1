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


// Experiment configuration: one JSON document covering layout, effects,
// sampler, model, training, split, tuner, census and ablation settings.
// Parsing is strict: unknown keys are rejected, missing keys keep defaults.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "efbg/evaluation.hpp"
#include "efbg/nn.hpp"
#include "efbg/optics.hpp"
#include "efbg/tuner.hpp"

namespace efbg {

struct ModelSection {
  std::string architecture = "scaled";  // scaled | paper | custom
  std::size_t fc_width = 256;           // scaled only
  nn::InitScheme init = nn::InitScheme::kXavierNormal;
  std::vector<nn::LayerSpec> layers;    // custom only
  std::uint64_t seed = 1;               // weight initialization

  nn::ModelConfig build() const;
};

struct EvalSection {
  double census_rmse_mm = 5.0;
  std::size_t census_count = 100;
  double saliency_step = 0.1;
};

struct AblationSection {
  std::vector<double> spacings_mm{50, 25, 10};
  std::size_t count = 200;
  std::uint64_t seed = 7;
};

struct TunerSection {
  SearchSpace space;
  SearchOptions options;  // options.base is taken from the train section
};

struct ExperimentConfig {
  SensorLayout layout = default_layout();
  EffectsConfig effects;
  ShapeSamplerConfig sampler;
  ModelSection model;
  nn::TrainConfig train;
  SplitSpec split;
  TunerSection tuner;
  EvalSection eval;
  AblationSection ablation;

  /// Throws kConfig naming the first invalid field.
  void validate() const;
};

/// Throws kConfig on malformed JSON, unknown keys or wrong types.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Fully resolved document (every field, fixed key order).
std::string config_json(const ExperimentConfig& cfg, int indent = 2);
/// 16 hex digits of FNV-1a over the compact resolved document.
std::string config_hash(const ExperimentConfig& cfg);

std::string fnv1a_hex(const std::string& bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Section-level JSON used by file headers.
std::string layout_json(const SensorLayout& layout);
SensorLayout parse_layout(const std::string& json_text);
std::string effects_json(const EffectsConfig& effects);
EffectsConfig parse_effects(const std::string& json_text);
std::string sampler_json(const ShapeSamplerConfig& sampler);
ShapeSamplerConfig parse_sampler(const std::string& json_text);
std::string model_config_json(const nn::ModelConfig& model);
nn::ModelConfig parse_model_config(const std::string& json_text);
std::string train_config_json(const nn::TrainConfig& train);
nn::TrainConfig parse_train_config(const std::string& json_text);
std::string trial_config_json(const TrialConfig& trial);
TrialConfig parse_trial_config(const std::string& json_text);

}  // namespace efbg
