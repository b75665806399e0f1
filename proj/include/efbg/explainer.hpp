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


// Perturbation saliency. Each wavelength element is raised by h in all
// three scans at once; the forward difference of the loss (or the marker
// displacement) is recorded per element.

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "efbg/nn.hpp"
#include "efbg/optics.hpp"

namespace efbg {

inline constexpr double kSaliencyStep = 0.1;

/// Maps `count` stacked inputs (count x 570) to count x outputs values.
using BatchPredictor = std::function<std::vector<double>(std::span<const double> inputs, std::size_t count)>;
using LossFn = std::function<double(std::span<const double> pred, std::span<const double> target)>;

struct SaliencyMap {
  std::array<double, kGridSize> deltas{};  // loss(modified) - loss(original)
};

struct MarkerSaliencyMap {
  std::size_t markers = 0;
  std::vector<double> distances;  // element-major: distances[j * markers + m], mm

  double at(std::size_t element, std::size_t marker) const { return distances[element * markers + marker]; }
};

/// Probes `input` in place; every probed element is restored from a saved
/// copy, so the buffer is bitwise unchanged afterwards.
SaliencyMap loss_saliency(const BatchPredictor& predict, std::span<double> input,
                          std::span<const double> target, const LossFn& loss, double h = kSaliencyStep);

/// Outputs are read as consecutive 3D markers.
MarkerSaliencyMap marker_saliency(const BatchPredictor& predict, std::span<double> input,
                                  double h = kSaliencyStep);

template <typename T>
BatchPredictor model_predictor(nn::Model<T>& model);

/// SmoothL1 against the sample's shape, beta in mm.
template <typename T>
SaliencyMap loss_saliency(nn::Model<T>& model, const SampleRecord& sample, double beta = 4.04,
                          double h = kSaliencyStep);

template <typename T>
MarkerSaliencyMap marker_saliency(nn::Model<T>& model, const SampleRecord& sample, double h = kSaliencyStep);

/// Per-element magnitude: |delta| for loss maps, summed marker distances
/// for marker maps.
std::array<double, kGridSize> element_magnitude(const SaliencyMap& map);
std::array<double, kGridSize> element_magnitude(const MarkerSaliencyMap& map);

struct SaliencyContrast {
  double near_mean = 0;  // elements within two bins of a Bragg peak flank
  double far_mean = 0;   // elements more than 1.5 nm from every Bragg wavelength
  double ratio = 0;
};

SaliencyContrast bragg_contrast(std::span<const double> magnitude, const SensorLayout& layout);

}  // namespace efbg
