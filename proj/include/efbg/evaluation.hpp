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


// Error metrics, quantile summaries, dataset splitting, the similarity
// census and the sensing-plane resolution ablation.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "efbg/geometry.hpp"
#include "efbg/optics.hpp"

namespace efbg {

using ShapeArray = std::array<float, kTargetSize>;

/// Distance between the last markers, mm.
double tip_error(const MarkerShape& pred, const MarkerShape& truth);
double tip_error(std::span<const float> pred, std::span<const float> truth);

/// Root mean square of the per-marker distances, mm.
double shape_rmse(const MarkerShape& pred, const MarkerShape& truth);
double shape_rmse(std::span<const float> pred, std::span<const float> truth);

struct ErrorSummary {
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double iqr = 0;
  double mean = 0;
  std::size_t count = 0;
};

/// Quantile p of sorted values, interpolating linearly between the order
/// statistics at positions (n - 1) p.
double quantile_sorted(std::span<const double> sorted, double p);

/// Throws kInvalidInput on an empty list.
ErrorSummary summarize(std::span<const double> errors);

struct ShapeErrorStats {
  std::vector<double> tip_mm;
  std::vector<double> rmse_mm;
  ErrorSummary tip;
  ErrorSummary rmse;
};

ShapeErrorStats shape_error_stats(std::span<const ShapeArray> pred, std::span<const ShapeArray> truth);

/// Mean over poses of the RMS distance of predicted tips from their pose
/// mean. Every group needs at least two predictions.
double precision_metric(std::span<const std::vector<Vec3>> tips_by_pose);

/// Groups predicted tips by SampleRecord::group.
std::vector<std::vector<Vec3>> group_tips(std::span<const ShapeArray> pred,
                                          std::span<const SampleRecord> records);

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then contiguous slices of floor(train n), floor(val n)
/// and the remainder. Needs n >= 10.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct DatasetSplit {
  Dataset train, val, test;
};

DatasetSplit split_dataset(const Dataset& dataset, const SplitSpec& spec);

/// Fraction of test samples with at least count_thresh training shapes
/// within rmse_thresh_mm.
double similarity_census(std::span<const SampleRecord> test, std::span<const SampleRecord> train,
                         double rmse_thresh_mm = 5.0, std::size_t count_thresh = 100);

/// Evenly spaced plane positions (k + 1/2) * spacing inside [0, length].
std::vector<double> plane_positions_for_spacing(double spacing, double length);

struct AblationRow {
  double spacing = 0;  // m
  std::size_t planes = 0;
  ErrorSummary tip;
  std::vector<double> tip_mm;
};

/// Per truth profile: dense centerline at 0.1 mm, spline resampling,
/// finite-difference readings at the planes a spacing implies, piecewise
/// reconstruction and tip error. One row per spacing.
std::vector<AblationRow> resolution_ablation(std::span<const CurvatureProfile> truths,
                                             std::span<const double> spacings, double length,
                                             unsigned threads = 1);

}  // namespace efbg
