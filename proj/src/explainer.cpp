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

#include "efbg/explainer.hpp"

#include <cmath>
#include <limits>

#include "efbg/error.hpp"

namespace efbg {

namespace {

// Stacks the original input followed by one probe per element, restoring
// each probed element before the next.
std::vector<double> probe_batch(std::span<double> input, double h) {
  require(input.size() == kFeatureSize, Errc::kInvalidInput, "saliency input must hold 3 x 190 values");
  require(std::isfinite(h) && h != 0, Errc::kInvalidInput, "saliency step must be finite and nonzero");
  std::vector<double> batch;
  batch.reserve((kGridSize + 1) * kFeatureSize);
  batch.insert(batch.end(), input.begin(), input.end());
  for (std::size_t j = 0; j < kGridSize; ++j) {
    std::array<double, kScanCount> saved{};
    for (std::size_t c = 0; c < kScanCount; ++c) {
      saved[c] = input[c * kGridSize + j];
      input[c * kGridSize + j] += h;
    }
    batch.insert(batch.end(), input.begin(), input.end());
    for (std::size_t c = 0; c < kScanCount; ++c) input[c * kGridSize + j] = saved[c];
  }
  return batch;
}

std::vector<double> run_predictor(const BatchPredictor& predict, std::span<const double> batch) {
  const std::size_t count = kGridSize + 1;
  std::vector<double> out = predict(batch, count);
  require(!out.empty() && out.size() % count == 0, Errc::kInvalidInput,
          "predictor output size is not a multiple of the batch");
  return out;
}

std::vector<double> record_input(const SampleRecord& sample) {
  return std::vector<double>(sample.spectra.begin(), sample.spectra.end());
}

}  // namespace

SaliencyMap loss_saliency(const BatchPredictor& predict, std::span<double> input,
                          std::span<const double> target, const LossFn& loss, double h) {
  const auto out = run_predictor(predict, probe_batch(input, h));
  const std::size_t width = out.size() / (kGridSize + 1);
  require(target.size() == width, Errc::kInvalidInput, "target size does not match the prediction");
  const double base = loss(std::span(out).subspan(0, width), target);
  SaliencyMap map;
  for (std::size_t j = 0; j < kGridSize; ++j) {
    map.deltas[j] = loss(std::span(out).subspan((j + 1) * width, width), target) - base;
  }
  return map;
}

MarkerSaliencyMap marker_saliency(const BatchPredictor& predict, std::span<double> input, double h) {
  const auto out = run_predictor(predict, probe_batch(input, h));
  const std::size_t width = out.size() / (kGridSize + 1);
  require(width % 3 == 0, Errc::kInvalidInput, "predictions must be 3D markers");
  MarkerSaliencyMap map;
  map.markers = width / 3;
  map.distances.resize(kGridSize * map.markers);
  for (std::size_t j = 0; j < kGridSize; ++j) {
    const double* probe = out.data() + (j + 1) * width;
    for (std::size_t m = 0; m < map.markers; ++m) {
      double s = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double d = probe[3 * m + k] - out[3 * m + k];
        s += d * d;
      }
      map.distances[j * map.markers + m] = std::sqrt(s);
    }
  }
  return map;
}

template <typename T>
BatchPredictor model_predictor(nn::Model<T>& model) {
  return [&model](std::span<const double> inputs, std::size_t count) {
    return nn::forward_features(model, inputs, count);
  };
}

template <typename T>
SaliencyMap loss_saliency(nn::Model<T>& model, const SampleRecord& sample, double beta, double h) {
  auto input = record_input(sample);
  const std::vector<double> target(sample.shape_mm.begin(), sample.shape_mm.end());
  const LossFn loss = [beta](std::span<const double> pred, std::span<const double> t) {
    return nn::smooth_l1<double>(pred, t, beta);
  };
  return loss_saliency(model_predictor(model), input, target, loss, h);
}

template <typename T>
MarkerSaliencyMap marker_saliency(nn::Model<T>& model, const SampleRecord& sample, double h) {
  auto input = record_input(sample);
  return marker_saliency(model_predictor(model), input, h);
}

std::array<double, kGridSize> element_magnitude(const SaliencyMap& map) {
  std::array<double, kGridSize> out{};
  for (std::size_t j = 0; j < kGridSize; ++j) out[j] = std::abs(map.deltas[j]);
  return out;
}

std::array<double, kGridSize> element_magnitude(const MarkerSaliencyMap& map) {
  std::array<double, kGridSize> out{};
  for (std::size_t j = 0; j < kGridSize; ++j) {
    for (std::size_t m = 0; m < map.markers; ++m) out[j] += map.at(j, m);
  }
  return out;
}

SaliencyContrast bragg_contrast(std::span<const double> magnitude, const SensorLayout& layout) {
  require(magnitude.size() == layout.grid.size() && layout.grid.size() >= 2, Errc::kInvalidInput,
          "saliency magnitude does not match the grid");
  const double bin = layout.grid[1] - layout.grid[0];
  double near_sum = 0, far_sum = 0;
  std::size_t near_n = 0, far_n = 0;
  for (std::size_t j = 0; j < layout.grid.size(); ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    bool on_flank = false;
    for (const auto& f : layout.fbgs) {
      const double d = std::abs(layout.grid[j] - f.lambda_bragg_nm);
      nearest = std::min(nearest, d);
      if (std::abs(d - 0.5 * f.peak_fwhm_nm) <= 2.0 * bin + 1e-12) on_flank = true;
    }
    if (on_flank) {
      near_sum += magnitude[j];
      ++near_n;
    } else if (nearest > 1.5) {
      far_sum += magnitude[j];
      ++far_n;
    }
  }
  require(near_n > 0 && far_n > 0, Errc::kInvalidInput, "layout leaves no near or far elements");
  SaliencyContrast c;
  c.near_mean = near_sum / static_cast<double>(near_n);
  c.far_mean = far_sum / static_cast<double>(far_n);
  c.ratio = c.far_mean > 0 ? c.near_mean / c.far_mean : std::numeric_limits<double>::infinity();
  return c;
}

#define EFBG_EXPLAINER_INSTANTIATE(T)                                                         \
  template BatchPredictor model_predictor<T>(nn::Model<T>&);                                  \
  template SaliencyMap loss_saliency<T>(nn::Model<T>&, const SampleRecord&, double, double);  \
  template MarkerSaliencyMap marker_saliency<T>(nn::Model<T>&, const SampleRecord&, double);

EFBG_EXPLAINER_INSTANTIATE(float)
EFBG_EXPLAINER_INSTANTIATE(double)

}  // namespace efbg
