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

#include "efbg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "efbg/error.hpp"
#include "efbg/rng.hpp"
#include "parallel.hpp"

namespace efbg {

namespace {

void require_shape_pair(std::size_t a, std::size_t b) {
  require(a == b && a > 0 && a % 3 == 0, Errc::kInvalidInput, "shape arrays must match and hold 3D points");
}

void require_marker_pair(const MarkerShape& a, const MarkerShape& b) {
  require(a.size() == b.size() && a.size() > 0, Errc::kInvalidInput, "marker shapes must match");
}

// Squared RMSE between two shapes, abandoning once the sum passes `limit`.
double squared_rmse_sum(const float* a, const float* b, double limit) {
  double s = 0;
  for (std::size_t i = 0; i < kTargetSize; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
    if (s > limit) break;
  }
  return s;
}

}  // namespace

double tip_error(const MarkerShape& pred, const MarkerShape& truth) {
  require_marker_pair(pred, truth);
  return (pred.tip() - truth.tip()).norm();
}

double tip_error(std::span<const float> pred, std::span<const float> truth) {
  require_shape_pair(pred.size(), truth.size());
  const std::size_t o = pred.size() - 3;
  double s = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = static_cast<double>(pred[o + k]) - static_cast<double>(truth[o + k]);
    s += d * d;
  }
  return std::sqrt(s);
}

double shape_rmse(const MarkerShape& pred, const MarkerShape& truth) {
  require_marker_pair(pred, truth);
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred.coords[i] - truth.coords[i]).squaredNorm();
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double shape_rmse(std::span<const float> pred, std::span<const float> truth) {
  require_shape_pair(pred.size(), truth.size());
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(pred.size() / 3));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), Errc::kInvalidInput, "quantile of an empty list");
  require(p >= 0 && p <= 1, Errc::kInvalidInput, "quantile level outside [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

ErrorSummary summarize(std::span<const double> errors) {
  require(!errors.empty(), Errc::kInvalidInput, "cannot summarize an empty error list");
  std::vector<double> v(errors.begin(), errors.end());
  for (double e : v) require(std::isfinite(e), Errc::kInvalidInput, "non-finite error value");
  std::sort(v.begin(), v.end());
  ErrorSummary s;
  s.count = v.size();
  s.median = quantile_sorted(v, 0.5);
  s.q1 = quantile_sorted(v, 0.25);
  s.q3 = quantile_sorted(v, 0.75);
  s.iqr = s.q3 - s.q1;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return s;
}

ShapeErrorStats shape_error_stats(std::span<const ShapeArray> pred, std::span<const ShapeArray> truth) {
  require(pred.size() == truth.size() && !pred.empty(), Errc::kInvalidInput,
          "prediction and truth counts differ or are empty");
  ShapeErrorStats st;
  st.tip_mm.reserve(pred.size());
  st.rmse_mm.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    st.tip_mm.push_back(tip_error(pred[i], truth[i]));
    st.rmse_mm.push_back(shape_rmse(pred[i], truth[i]));
  }
  st.tip = summarize(st.tip_mm);
  st.rmse = summarize(st.rmse_mm);
  return st;
}

double precision_metric(std::span<const std::vector<Vec3>> tips_by_pose) {
  require(!tips_by_pose.empty(), Errc::kInvalidInput, "no poses");
  double total = 0;
  for (const auto& group : tips_by_pose) {
    require(group.size() >= 2, Errc::kInvalidInput, "precision needs two or more repetitions per pose");
    Vec3 mean = Vec3::Zero();
    for (const auto& p : group) mean += p;
    mean /= static_cast<double>(group.size());
    double ss = 0;
    for (const auto& p : group) ss += (p - mean).squaredNorm();
    total += std::sqrt(ss / static_cast<double>(group.size()));
  }
  return total / static_cast<double>(tips_by_pose.size());
}

std::vector<std::vector<Vec3>> group_tips(std::span<const ShapeArray> pred,
                                          std::span<const SampleRecord> records) {
  require(pred.size() == records.size(), Errc::kInvalidInput, "prediction and record counts differ");
  std::map<std::uint32_t, std::vector<Vec3>> groups;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& p = pred[i];
    groups[records[i].group].emplace_back(p[kTargetSize - 3], p[kTargetSize - 2], p[kTargetSize - 1]);
  }
  std::vector<std::vector<Vec3>> out;
  out.reserve(groups.size());
  for (auto& [id, tips] : groups) out.push_back(std::move(tips));
  return out;
}

void SplitSpec::validate() const {
  require(train >= 0 && val >= 0 && test >= 0, Errc::kConfig, "split fractions must be non-negative");
  require(std::abs(train + val + test - 1.0) < 1e-9, Errc::kConfig, "split fractions must sum to 1");
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  require(n >= 10, Errc::kInvalidInput, "splitting needs at least 10 samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derived_rng(spec.seed, 0x73706c6974ULL);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  // The small slack keeps products like 0.8 * 58000 from flooring one short.
  const auto nd = static_cast<double>(n);
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train * nd + 1e-7));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(spec.val * nd + 1e-7)));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

DatasetSplit split_dataset(const Dataset& dataset, const SplitSpec& spec) {
  const SplitIndices idx = split_indices(dataset.size(), spec);
  return {dataset.subset(idx.train), dataset.subset(idx.val), dataset.subset(idx.test)};
}

double similarity_census(std::span<const SampleRecord> test, std::span<const SampleRecord> train,
                         double rmse_thresh_mm, std::size_t count_thresh) {
  require(!test.empty() && !train.empty(), Errc::kInvalidInput, "census needs non-empty sets");
  require(rmse_thresh_mm >= 0, Errc::kInvalidInput, "similarity threshold must be non-negative");
  // rmse <= t  <=>  sum of squared coordinate differences <= markers * t^2.
  const double limit = static_cast<double>(kMarkerCount) * rmse_thresh_mm * rmse_thresh_mm;
  std::size_t hits = 0;
  for (const auto& t : test) {
    std::size_t similar = 0;
    for (const auto& r : train) {
      if (squared_rmse_sum(t.shape_mm.data(), r.shape_mm.data(), limit) <= limit) {
        if (++similar >= count_thresh) break;
      }
    }
    if (similar >= count_thresh) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

std::vector<double> plane_positions_for_spacing(double spacing, double length) {
  require(spacing > 0 && length > 0, Errc::kInvalidInput, "spacing and length must be positive");
  std::vector<double> pos;
  for (std::size_t k = 0;; ++k) {
    const double s = (static_cast<double>(k) + 0.5) * spacing;
    if (s > length + 1e-12) break;
    pos.push_back(std::min(s, length));
  }
  require(!pos.empty(), Errc::kInvalidInput, "spacing leaves no plane on the fiber");
  return pos;
}

std::vector<AblationRow> resolution_ablation(std::span<const CurvatureProfile> truths,
                                             std::span<const double> spacings, double length,
                                             unsigned threads) {
  require(!truths.empty() && !spacings.empty(), Errc::kInvalidInput, "ablation needs shapes and spacings");
  constexpr double kDenseStep = 1e-4;
  std::vector<std::vector<double>> positions;
  for (double sp : spacings) positions.push_back(plane_positions_for_spacing(sp, length));

  std::vector<std::vector<double>> errors(spacings.size(), std::vector<double>(truths.size()));
  detail::parallel_for(truths.size(), threads, [&](std::size_t i) {
    const ArcLengthCurve dense = integrate_frenet(truths[i], kDenseStep);
    const MarkerShape truth = markers_from_curve(dense);
    const ArcLengthCurve fitted = resample_spline(dense.points, kDenseStep);
    for (std::size_t j = 0; j < spacings.size(); ++j) {
      std::vector<PlaneReading> readings;
      readings.reserve(positions[j].size());
      for (double s : positions[j]) {
        const CurvatureEstimate e = estimate_curvature_torsion(fitted, s);
        readings.push_back({s, e.kappa, e.theta});
      }
      const ArcLengthCurve rec = reconstruct_from_plane_readings(readings, length, kDenseStep);
      errors[j][i] = tip_error(markers_from_curve(rec), truth);
    }
  });

  std::vector<AblationRow> rows;
  for (std::size_t j = 0; j < spacings.size(); ++j) {
    AblationRow row;
    row.spacing = spacings[j];
    row.planes = positions[j].size();
    row.tip = summarize(errors[j]);
    row.tip_mm = std::move(errors[j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace efbg
