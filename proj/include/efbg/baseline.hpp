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

// Mode-field-dislocation baseline: per-FBG cosine-law calibration, plane
// curvature vectors from co-located intensity ratios, and piecewise
// reconstruction.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "efbg/geometry.hpp"
#include "efbg/optics.hpp"

namespace efbg {

using PlaneIntensities = std::array<double, kFbgCount>;

struct FbgCalibration {
  double phi = 0;    // fitted angular position, rad
  double gain = 0;   // c * r, m
  double i0 = 0;     // straight-fiber intensity
  double residual_rms = 0;
};

struct BlCalibration {
  std::array<FbgCalibration, kFbgCount> fbgs{};
  std::array<double, kPlaneCount> plane_positions{};
  double length = 0.30;
};

struct CalibrationSample {
  std::vector<SpectrumScan> scans;  // averaged before fitting
  std::array<PlaneReading, kPlaneCount> truth;
};

/// Windowed maximum within +-1 FWHM of each nominal Bragg wavelength, refined
/// by a log-parabola through the maximum and its neighbours.
PlaneIntensities read_plane_intensities(const SpectrumScan& scan, const SensorLayout& layout);

/// Element-wise mean over scans.
PlaneIntensities read_plane_intensities(std::span<const SpectrumScan> scans,
                                        const SensorLayout& layout);

/// Least-squares fit of I = g_n * i0 (1 - gain kappa cos(theta - phi)) per FBG,
/// with a per-sample common scale g_n absorbing peak normalization.
BlCalibration calibrate(std::span<const CalibrationSample> samples, const SensorLayout& layout);
BlCalibration calibrate(const Dataset& dataset);

std::array<PlaneReading, kPlaneCount> estimate_plane_readings(const PlaneIntensities& intensities,
                                                              const BlCalibration& calib);

MarkerShape predict_shape_bl(std::span<const SpectrumScan> scans, const BlCalibration& calib,
                             const SensorLayout& layout);

}  // namespace efbg
