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

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "efbg/error.hpp"
#include "efbg/explainer.hpp"

using namespace efbg;
using namespace efbg::nn;

namespace {

std::vector<double> random_input(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(kFeatureSize);
  for (auto& v : x) v = u(rng);
  return x;
}

// y = W x with a fixed pseudo-random W (outputs x 570).
struct LinearModel {
  std::size_t outputs;
  std::vector<double> w;

  LinearModel(std::size_t out, std::uint64_t seed) : outputs(out), w(out * kFeatureSize) {
    Rng rng(seed);
    std::normal_distribution<double> n(0, 1);
    for (auto& v : w) v = n(rng);
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(outputs, 0.0);
    for (std::size_t o = 0; o < outputs; ++o) {
      for (std::size_t i = 0; i < kFeatureSize; ++i) y[o] += w[o * kFeatureSize + i] * x[i];
    }
    return y;
  }

  BatchPredictor predictor() const {
    return [this](std::span<const double> in, std::size_t count) {
      std::vector<double> out;
      for (std::size_t b = 0; b < count; ++b) {
        const auto y = apply(in.subspan(b * kFeatureSize, kFeatureSize));
        out.insert(out.end(), y.begin(), y.end());
      }
      return out;
    };
  }
};

double squared_error(std::span<const double> p, std::span<const double> t) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  return s;
}

}  // namespace

TEST_CASE("an element the model ignores has zero saliency") {
  ModelConfig mc;
  mc.layers = {LayerSpec::flatten(), LayerSpec::dense(kTargetSize)};
  Model<double> model(mc, 4);
  const std::size_t j = 77;
  auto params = model.parameters();
  auto w = params.front().value;
  REQUIRE(w.size() == kTargetSize * kFeatureSize);
  for (std::size_t o = 0; o < kTargetSize; ++o) {
    for (std::size_t c = 0; c < kScanCount; ++c) w[o * kFeatureSize + c * kGridSize + j] = 0.0;
  }
  SampleRecord rec;
  const auto x = random_input(3);
  for (std::size_t i = 0; i < kFeatureSize; ++i) rec.spectra[i] = static_cast<float>(x[i]);
  for (std::size_t i = 0; i < kTargetSize; ++i) rec.shape_mm[i] = static_cast<float>(i);

  const auto lmap = loss_saliency(model, rec);
  CHECK(lmap.deltas[j] == 0.0);
  CHECK(lmap.deltas[j + 1] != 0.0);
  const auto mmap = marker_saliency(model, rec);
  for (std::size_t m = 0; m < kMarkerCount; ++m) CHECK(mmap.at(j, m) == 0.0);
}

TEST_CASE("linear model saliency matches the closed form") {
  const LinearModel lin(kTargetSize, 8);
  auto x = random_input(9);
  const auto original = x;
  std::vector<double> target(kTargetSize);
  for (std::size_t i = 0; i < kTargetSize; ++i) target[i] = 0.1 * static_cast<double>(i);
  const double h = 0.1;
  const auto map = loss_saliency(lin.predictor(), x, target, squared_error, h);
  CHECK(std::memcmp(x.data(), original.data(), x.size() * sizeof(double)) == 0);

  // L(x + h e_j) - L(x) = 2 h r . (W e_j) + h^2 |W e_j|^2 with r = W x - t.
  const auto y = lin.apply(x);
  for (std::size_t j = 0; j < kGridSize; ++j) {
    double lin_term = 0, quad = 0;
    for (std::size_t o = 0; o < kTargetSize; ++o) {
      double we = 0;
      for (std::size_t c = 0; c < kScanCount; ++c) we += lin.w[o * kFeatureSize + c * kGridSize + j];
      lin_term += (y[o] - target[o]) * we;
      quad += we * we;
    }
    const double expected = 2 * h * lin_term + h * h * quad;
    REQUIRE(map.deltas[j] == doctest::Approx(expected).epsilon(1e-9));
  }

  // Marker displacement of a linear model scales linearly in h.
  const auto m1 = marker_saliency(lin.predictor(), x, 0.1);
  const auto m2 = marker_saliency(lin.predictor(), x, 0.2);
  REQUIRE(m1.markers == kMarkerCount);
  for (std::size_t i = 0; i < m1.distances.size(); ++i) {
    REQUIRE(m2.distances[i] == doctest::Approx(2 * m1.distances[i]).epsilon(1e-9));
  }
}

TEST_CASE("constant model gives zero marker saliency") {
  const BatchPredictor constant = [](std::span<const double>, std::size_t count) {
    return std::vector<double>(count * kTargetSize, 3.5);
  };
  auto x = random_input(1);
  const auto map = marker_saliency(constant, x);
  CHECK(map.distances.size() == kGridSize * kMarkerCount);
  for (double d : map.distances) CHECK(d == 0.0);
}

TEST_CASE("loss and marker maps agree and sweeps are deterministic") {
  Model<double> model(scaled_architecture(32), 5);
  SampleRecord rec;
  const auto x = random_input(12);
  for (std::size_t i = 0; i < kFeatureSize; ++i) rec.spectra[i] = static_cast<float>(x[i]);
  for (std::size_t i = 0; i < kTargetSize; ++i) rec.shape_mm[i] = static_cast<float>(i % 7);

  const auto lmap = loss_saliency(model, rec);
  const auto mmap = marker_saliency(model, rec);
  std::size_t arg = 0;
  for (std::size_t j = 1; j < kGridSize; ++j) {
    if (std::abs(lmap.deltas[j]) > std::abs(lmap.deltas[arg])) arg = j;
  }
  CHECK(element_magnitude(mmap)[arg] > 0.0);
  for (double d : mmap.distances) CHECK(d >= 0.0);

  const auto again = loss_saliency(model, rec);
  CHECK(again.deltas == lmap.deltas);
  CHECK(marker_saliency(model, rec).distances == mmap.distances);

  auto bad = random_input(1);
  bad.pop_back();
  CHECK_THROWS_AS(marker_saliency(model_predictor(model), bad), Error);
}

TEST_CASE("Bragg contrast partitions the grid") {
  const auto layout = default_layout();
  std::vector<double> flat(kGridSize, 1.0);
  auto c = bragg_contrast(flat, layout);
  CHECK(c.ratio == doctest::Approx(1.0));

  // Magnitude concentrated on the first flank of the first grating.
  std::vector<double> peaked(kGridSize, 0.1);
  for (std::size_t j = 0; j < kGridSize; ++j) {
    const double d = std::abs(layout.grid[j] - layout.fbgs[0].lambda_bragg_nm);
    if (std::abs(d - 0.5) < 0.3) peaked[j] = 10.0;
  }
  c = bragg_contrast(peaked, layout);
  CHECK(c.ratio > 1.0);
  CHECK(c.far_mean == doctest::Approx(0.1));
}
