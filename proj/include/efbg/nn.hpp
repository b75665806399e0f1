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

// A small reverse-mode network stack for 1D spectra: Conv1D, MaxPool1D,
// BatchNorm1D, Dropout, FullyConnected, ReLU and Flatten, trained with
// SmoothL1 and Adam. Instantiated for float (training) and double (checks).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "efbg/optics.hpp"
#include "efbg/rng.hpp"

namespace efbg::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty unless requested

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), values(numel(shape), fill) {}

  std::size_t size() const noexcept { return values.size(); }
  std::size_t batch() const noexcept { return shape.empty() ? 0 : shape.front(); }
};

enum class InitScheme { kStandard, kXavierUniform, kXavierNormal, kKaimingUniform, kKaimingNormal };

const char* init_scheme_name(InitScheme s) noexcept;
InitScheme parse_init_scheme(const std::string& name);

struct LayerSpec {
  enum class Kind { kConv1D, kMaxPool1D, kBatchNorm1D, kDropout, kFullyConnected, kReLU, kFlatten };

  Kind kind = Kind::kReLU;
  std::size_t out_channels = 0;  // Conv1D
  std::size_t kernel = 3;        // Conv1D, MaxPool1D
  std::size_t stride = 1;        // Conv1D, MaxPool1D
  std::size_t padding = 1;       // Conv1D ("same" for kernel 3)
  double momentum = 0.1;         // BatchNorm1D
  double eps = 1e-5;             // BatchNorm1D
  double p = 0;                  // Dropout
  std::size_t units = 0;         // FullyConnected

  static LayerSpec conv(std::size_t channels, std::size_t stride = 1);
  static LayerSpec pool(std::size_t kernel, std::size_t stride);
  static LayerSpec batch_norm();
  static LayerSpec dropout(double p);
  static LayerSpec dense(std::size_t units);
  static LayerSpec relu();
  static LayerSpec flatten();

  std::string kind_name() const;
  bool operator==(const LayerSpec&) const = default;
};

struct ModelConfig {
  std::vector<LayerSpec> layers;
  InitScheme init = InitScheme::kXavierNormal;
  std::size_t in_channels = kScanCount;
  std::size_t in_length = kGridSize;
  std::size_t output_size = kTargetSize;

  /// Throws kInvalidInput if the stack is malformed or does not end in an
  /// output-sized FullyConnected layer.
  void validate() const;
  /// Output shape (without batch) after every layer.
  std::vector<Shape> shape_trace() const;
  /// Width entering the first FullyConnected layer.
  std::size_t flatten_width() const;
};

/// The tuned architecture with 2000-unit FC layers.
ModelConfig paper_architecture();
/// Same topology with narrower FC layers for desk-scale runs.
ModelConfig scaled_architecture(std::size_t fc_width = 256);

struct TrainConfig {
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  double smooth_l1_beta = 4.04;
  double l2 = 0.0;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  bool float64 = false;
  /// Start the output bias at the mean training target (targets are in mm).
  bool init_output_bias_to_mean = true;

  void validate() const;
};

template <typename T>
struct ParamView {
  std::span<T> value;
  std::span<T> grad;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual const LayerSpec& spec() const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
  /// Gradient w.r.t. the input of the last train-mode forward; accumulates
  /// parameter gradients.
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<ParamView<T>> params() { return {}; }
  /// Non-trainable state (BatchNorm running statistics).
  virtual std::vector<std::span<T>> buffers() { return {}; }
  virtual void init(InitScheme, Rng&) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Builds one layer for a per-sample input shape ([C, L] or [F]).
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& in_shape, Rng* dropout_rng);

template <typename T>
class Model {
 public:
  Model(ModelConfig config, std::uint64_t init_seed);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }

  /// batch: [B, C, L]. Train mode needs B >= 2 when the stack has BatchNorm.
  Tensor<T> forward(const Tensor<T>& batch, bool train);
  /// Gradient w.r.t. the input of the last train-mode forward.
  Tensor<T> backward(const Tensor<T>& grad_output);

  std::vector<ParamView<T>> parameters();
  std::vector<std::span<T>> buffers();
  void zero_grad();
  std::size_t parameter_count();

  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  void reseed_dropout(std::uint64_t seed);

 private:
  ModelConfig config_;
  std::unique_ptr<Rng> dropout_rng_;  // heap-held so Dropout layers survive moves
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  bool has_forward_ = false;
};

/// Mean SmoothL1: 0.5 d^2 / beta if |d| < beta, else |d| - 0.5 beta (plain L1
/// at beta = 0).
/// Writes d(loss)/d(pred) into grad when non-null.
template <typename T>
double smooth_l1(std::span<const T> pred, std::span<const T> target, double beta,
                 std::vector<T>* grad = nullptr);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 0.0;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions opts) : opts_(opts) {}
  /// Bias-corrected update; l2 * param is added to each gradient first.
  /// Throws kDiverged on a non-finite gradient.
  void step(std::vector<ParamView<T>> params);
  std::uint64_t steps() const noexcept { return t_; }
  const AdamOptions& options() const noexcept { return opts_; }

  // Moment buffers, parallel to the parameter list.
  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  AdamOptions opts_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_rmse_mm;
  std::size_t best_epoch = 0;
  double best_val_loss = 0;
  double best_val_rmse_mm = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss,
                                         double val_rmse_mm)>;

/// Seeded shuffling, Adam updates and best-validation retention. Throws
/// kDiverged (with the epoch index) on a non-finite loss.
template <typename T>
TrainHistory train(Model<T>& model, std::span<const SampleRecord> train_set,
                   std::span<const SampleRecord> val_set, const TrainConfig& cfg,
                   Adam<T>* optimizer = nullptr, const EpochCallback& on_epoch = {});

/// Eval-mode predictions (N x 60, mm), evaluated in chunks.
template <typename T>
std::vector<std::array<float, kTargetSize>> predict_batch(Model<T>& model,
                                                          std::span<const SampleRecord> records);

template <typename T>
MarkerShape predict(Model<T>& model, std::span<const SpectrumScan> scans);

/// Packs records into a [N, 3, 190] input tensor.
template <typename T>
Tensor<T> pack_inputs(std::span<const SampleRecord> records);

/// Eval-mode forward on raw 570-element inputs; used by the explainer.
template <typename T>
std::vector<double> forward_features(Model<T>& model, std::span<const double> inputs,
                                     std::size_t count);

}  // namespace efbg::nn
