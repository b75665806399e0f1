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

#include "efbg/baseline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

#include "efbg/error.hpp"

namespace efbg {

namespace {

constexpr int kFitIterations = 25;

}  // namespace

PlaneIntensities read_plane_intensities(const SpectrumScan& scan, const SensorLayout& layout) {
  const auto& v = scan.intensities;
  require(v.size() == layout.grid.size(), Errc::kInvalidInput, "scan is not on the layout grid");
  PlaneIntensities out{};
  for (std::size_t i = 0; i < kFbgCount; ++i) {
    const auto& f = layout.fbgs[i];
    std::size_t best = v.size();
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (std::abs(layout.grid[j] - f.lambda_bragg_nm) > f.peak_fwhm_nm) continue;
      if (best == v.size() || v[j] > v[best]) best = j;
    }
    require(best != v.size(), Errc::kInvalidInput, "empty intensity window for an FBG");
    double peak = v[best];
    if (best > 0 && best + 1 < v.size() && v[best - 1] > 0 && v[best + 1] > 0 && v[best] > 0) {
      const double a = std::log(v[best - 1]);
      const double b = std::log(v[best]);
      const double c = std::log(v[best + 1]);
      const double curv = a - 2.0 * b + c;
      if (curv < 0) {
        const double delta = std::clamp(0.5 * (a - c) / curv, -1.0, 1.0);
        peak = std::exp(b - 0.25 * (a - c) * delta);
      }
    }
    out[i] = peak;
  }
  return out;
}

PlaneIntensities read_plane_intensities(std::span<const SpectrumScan> scans,
                                        const SensorLayout& layout) {
  require(!scans.empty(), Errc::kInvalidInput, "no scans");
  PlaneIntensities sum{};
  for (const auto& s : scans) {
    const auto one = read_plane_intensities(s, layout);
    for (std::size_t i = 0; i < kFbgCount; ++i) sum[i] += one[i];
  }
  for (auto& x : sum) x /= static_cast<double>(scans.size());
  return sum;
}

BlCalibration calibrate(std::span<const CalibrationSample> samples, const SensorLayout& layout) {
  require(!samples.empty(), Errc::kInsufficientExcitation, "empty calibration set");
  const std::size_t n = samples.size();

  // Excitation: >= 8 distinct bend directions and >= 2 curvature magnitudes per plane.
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    std::set<long> thetas, kappas;
    for (const auto& s : samples) {
      const auto& r = s.truth[p];
      if (r.kappa < 0.05) continue;
      thetas.insert(std::lround(r.theta * 180.0 / kPi));
      kappas.insert(std::lround(r.kappa * 100.0));
    }
    require(thetas.size() >= 8 && kappas.size() >= 2, Errc::kInsufficientExcitation,
            "calibration set does not excite plane " + std::to_string(p));
  }

  Eigen::MatrixXd meas(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFbgCount));
  Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kPlaneCount));
  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kPlaneCount));
  for (std::size_t k = 0; k < n; ++k) {
    const auto ints = read_plane_intensities(samples[k].scans, layout);
    const auto row = static_cast<Eigen::Index>(k);
    for (std::size_t i = 0; i < kFbgCount; ++i) meas(row, static_cast<Eigen::Index>(i)) = ints[i];
    for (std::size_t p = 0; p < kPlaneCount; ++p) {
      const auto& r = samples[k].truth[p];
      u(row, static_cast<Eigen::Index>(p)) = r.kappa * std::cos(r.theta);
      v(row, static_cast<Eigen::Index>(p)) = r.kappa * std::sin(r.theta);
    }
  }

  Eigen::VectorXd g = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd coef(3, static_cast<Eigen::Index>(kFbgCount));  // (i0, alpha, beta) per FBG
  Eigen::MatrixXd model(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFbgCount));
  for (int iter = 0; iter < kFitIterations; ++iter) {
    for (std::size_t i = 0; i < kFbgCount; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const auto p = static_cast<Eigen::Index>(i / kFbgsPerPlane);
      Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 3);
      design.col(0).setOnes();
      design.col(1) = u.col(p);
      design.col(2) = v.col(p);
      const Eigen::VectorXd target = meas.col(col).cwiseQuotient(g);
      const Eigen::Matrix3d normal = design.transpose() * design;
      require(std::abs(normal.determinant()) > 1e-12 * std::pow(normal.trace(), 3),
              Errc::kInsufficientExcitation, "calibration normal equations are singular");
      coef.col(col) = normal.ldlt().solve(design.transpose() * target);
      model.col(col) = design * coef.col(col);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      g(row) = meas.row(row).dot(model.row(row)) / model.row(row).squaredNorm();
    }
    g /= g.mean();
  }

  BlCalibration calib;
  calib.plane_positions = layout.plane_positions;
  calib.length = layout.length;
  for (std::size_t i = 0; i < kFbgCount; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double i0 = coef(0, col);
    const double alpha = coef(1, col);
    const double beta = coef(2, col);
    require(i0 > 1e-9, Errc::kCalibrationDegenerate, "non-positive fitted base intensity");
    auto& f = calib.fbgs[i];
    f.i0 = i0;
    f.gain = std::hypot(alpha, beta) / i0;
    f.phi = std::atan2(-beta, -alpha);
    const Eigen::VectorXd resid = meas.col(col) - g.cwiseProduct(model.col(col));
    f.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  }
  return calib;
}

BlCalibration calibrate(const Dataset& dataset) {
  std::vector<CalibrationSample> samples;
  samples.reserve(dataset.size());
  for (const auto& r : dataset.records) {
    const auto scans = r.scans();
    samples.push_back({std::vector<SpectrumScan>(scans.begin(), scans.end()),
                       r.readings(dataset.header.layout)});
  }
  return calibrate(samples, dataset.header.layout);
}

std::array<PlaneReading, kPlaneCount> estimate_plane_readings(const PlaneIntensities& intensities,
                                                              const BlCalibration& calib) {
  std::array<PlaneReading, kPlaneCount> out;
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    Eigen::Matrix3d a;
    Eigen::Vector3d rhs;
    for (std::size_t k = 0; k < kFbgsPerPlane; ++k) {
      const auto& f = calib.fbgs[p * kFbgsPerPlane + k];
      require(std::abs(f.i0) > 1e-12, Errc::kCalibrationDegenerate, "calibrated base intensity is zero");
      const auto row = static_cast<Eigen::Index>(k);
      a(row, 0) = 1.0;
      a(row, 1) = -f.gain * std::cos(f.phi);
      a(row, 2) = -f.gain * std::sin(f.phi);
      rhs(row) = intensities[p * kFbgsPerPlane + k] / f.i0;
    }
    Eigen::Vector3d x = a.colPivHouseholderQr().solve(rhs);
    if (!(std::isfinite(x(0)) && x(0) > 1e-3)) {
      // Readings no scaled cosine law can explain: fit (I/i0 - 1) at unit scale.
      const Eigen::Matrix<double, 3, 2> d = a.rightCols<2>();
      x << 1.0, d.colPivHouseholderQr().solve(rhs - Eigen::Vector3d::Ones());
    }
    const double ku = x(1) / x(0);
    const double kv = x(2) / x(0);
    const double kappa = std::hypot(ku, kv);
    out[p] = {calib.plane_positions[p], kappa,
              kappa < kKappaStraightEps ? 0.0 : wrap_angle(std::atan2(kv, ku))};
  }
  return out;
}

MarkerShape predict_shape_bl(std::span<const SpectrumScan> scans, const BlCalibration& calib,
                             const SensorLayout& layout) {
  const auto readings = estimate_plane_readings(read_plane_intensities(scans, layout), calib);
  return markers_from_curve(reconstruct_from_plane_readings(readings, calib.length, kShapeStep),
                            kMarkerCount);
}

}  // namespace efbg
