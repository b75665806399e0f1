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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "efbg/baseline.hpp"
#include "efbg/error.hpp"

using namespace efbg;

namespace {

std::vector<PlaneReading> random_readings(Rng& rng, const SensorLayout& l) {
  std::uniform_real_distribution<double> k(0.58, 33.5), th(-kPi, kPi);
  std::vector<PlaneReading> out;
  for (double s : l.plane_positions) out.push_back({s, k(rng), th(rng)});
  return out;
}

std::vector<CalibrationSample> calibration_set(const SensorLayout& l, const EffectsConfig& fx,
                                               std::size_t n, std::uint64_t seed) {
  std::vector<CalibrationSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = derived_rng(seed, i);
    const auto prof = sample_random_shape(ShapeSamplerConfig{}, rng);
    const auto s = simulate_sample(prof, l, fx, rng);
    out.push_back({std::vector<SpectrumScan>(s.scans.begin(), s.scans.end()), s.plane_truth});
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("peak reading recovers generator amplitudes") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  const double cr = fx.mode_field_gain * 2e-6;
  for (double kappa : {5.0, 33.5}) {
    const std::vector<PlaneReading> rs(5, PlaneReading{0, kappa, 0.4});
    std::vector<PlaneReading> placed = rs;
    for (std::size_t p = 0; p < 5; ++p) placed[p].s = l.plane_positions[p];
    const auto prof = profile_from_plane_readings(placed, 0.3);
    const auto I = read_plane_intensities(SpectrumScan{raw_spectrum(prof, l, fx)}, l);
    for (std::size_t i = 0; i < kFbgCount; ++i) {
      const double a = 0.9 * (1 - cr * kappa * std::cos(0.4 - l.fbgs[i].phi));
      CHECK(I[i] == doctest::Approx(a).epsilon(0.01));
    }
  }
  // Largest Bragg shift is far inside the +-1 FWHM window.
  const double shift = 869 * (1 - fx.photoelastic) * 33.5 * 2e-6;
  CHECK(shift < 0.1 * l.fbgs.back().peak_fwhm_nm);

  SpectrumScan bad{std::vector<double>(10, 1.0)};
  CHECK_THROWS_AS(read_plane_intensities(bad, l), Error);
}

TEST_CASE("calibration recovers angular positions and gains") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  const auto calib = calibrate(calibration_set(l, fx, 120, 4), l);
  for (std::size_t i = 0; i < kFbgCount; ++i) {
    const auto& f = calib.fbgs[i];
    CHECK(std::abs(wrap_angle(f.phi - l.fbgs[i].phi)) < kPi / 180);
    CHECK(f.gain == doctest::Approx(fx.mode_field_gain * 2e-6).epsilon(0.05));
    CHECK(f.gain > 0);
  }
}

TEST_CASE("calibration rejects unexciting sets") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  std::vector<CalibrationSample> flat;
  const CurvatureProfile straight({{0, 0, 0, 0}}, 0.3, Interpolation::kPiecewiseConstant);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto s = simulate_sample(straight, l, fx, rng);
    flat.push_back({std::vector<SpectrumScan>(s.scans.begin(), s.scans.end()), s.plane_truth});
  }
  try {
    calibrate(flat, l);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kInsufficientExcitation);
  }
}

TEST_CASE("confounders raise the calibration residual") {
  const auto l = default_layout();
  const auto off = calibrate(calibration_set(l, EffectsConfig::confounders_off(), 100, 9), l);
  auto on_fx = EffectsConfig{};
  on_fx.noise_sigma = 0;
  const auto on = calibrate(calibration_set(l, on_fx, 100, 9), l);
  for (std::size_t i = 0; i < kFbgCount; ++i) {
    CHECK(on.fbgs[i].residual_rms > off.fbgs[i].residual_rms);
  }
}

TEST_CASE("plane inversion") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  BlCalibration calib;
  calib.plane_positions = l.plane_positions;
  for (std::size_t i = 0; i < kFbgCount; ++i) {
    calib.fbgs[i] = {l.fbgs[i].phi, fx.mode_field_gain * 2e-6, 0.9, 0};
  }
  PlaneIntensities eq;
  eq.fill(0.7);
  for (const auto& r : estimate_plane_readings(eq, calib)) {
    CHECK(r.kappa < 1e-9);
    CHECK(r.theta == 0.0);
  }

  for (auto [kappa, tol] : {std::pair{5.0, 0.01}, std::pair{33.5, 0.02}}) {
    const double theta = kPi / 6;
    std::vector<PlaneReading> rs;
    for (double s : l.plane_positions) rs.push_back({s, kappa, theta});
    const auto prof = profile_from_plane_readings(rs, 0.3);
    const auto I = read_plane_intensities(SpectrumScan{clean_spectrum(prof, l, fx)}, l);
    for (const auto& r : estimate_plane_readings(I, calib)) {
      CHECK(r.kappa == doctest::Approx(kappa).epsilon(tol));
      CHECK(std::abs(wrap_angle(r.theta - theta)) < kPi / 180);
    }
    // Uniform scaling leaves the direction unchanged.
    auto scaled = I;
    for (auto& x : scaled) x *= 0.37;
    const auto a = estimate_plane_readings(I, calib);
    const auto b = estimate_plane_readings(scaled, calib);
    for (std::size_t p = 0; p < kPlaneCount; ++p) {
      CHECK(b[p].theta == doctest::Approx(a[p].theta).epsilon(1e-9));
    }
  }

  // Readings that no positive scale explains still give finite output.
  PlaneIntensities odd;
  odd.fill(0.0);
  odd[0] = 0.5;
  for (const auto& r : estimate_plane_readings(odd, calib)) {
    CHECK(std::isfinite(r.kappa));
    CHECK(std::isfinite(r.theta));
  }

  calib.fbgs[4].i0 = 0;
  CHECK_THROWS_AS(estimate_plane_readings(eq, calib), Error);
}

TEST_CASE("BL shape prediction in the exact-model regime") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  const auto calib = calibrate(calibration_set(l, fx, 120, 4), l);

  const CurvatureProfile straight({{0, 0, 0, 0}}, 0.3, Interpolation::kPiecewiseConstant);
  Rng rng(2);
  const auto s0 = simulate_sample(straight, l, fx, rng);
  CHECK((predict_shape_bl(s0.scans, calib, l).tip() - s0.shape.tip()).norm() < 0.1);

  std::vector<double> tips;
  for (std::uint64_t n = 0; n < 100; ++n) {
    Rng r = derived_rng(77, n);
    const auto prof = profile_from_plane_readings(random_readings(r, l), 0.3);
    const auto s = simulate_sample(prof, l, fx, r);
    tips.push_back((predict_shape_bl(s.scans, calib, l).tip() - s.shape.tip()).norm());
  }
  CHECK(median(tips) < 1.0);
}

TEST_CASE("confounders degrade BL on a fixed corpus") {
  const auto l = default_layout();
  const auto off_fx = EffectsConfig::confounders_off();
  auto on_fx = EffectsConfig{};
  on_fx.noise_sigma = 0;
  const auto calib_off = calibrate(calibration_set(l, off_fx, 150, 4), l);
  const auto calib_on = calibrate(calibration_set(l, on_fx, 150, 4), l);
  double err_off = 0, err_on = 0;
  for (std::uint64_t n = 0; n < 50; ++n) {
    Rng r = derived_rng(99, n);
    const auto prof = profile_from_plane_readings(random_readings(r, l), 0.3);
    Rng ra(1), rb(1);
    const auto a = simulate_sample(prof, l, off_fx, ra);
    const auto b = simulate_sample(prof, l, on_fx, rb);
    err_off += (predict_shape_bl(a.scans, calib_off, l).tip() - a.shape.tip()).norm();
    err_on += (predict_shape_bl(b.scans, calib_on, l).tip() - b.shape.tip()).norm();
  }
  CHECK(err_on > err_off);
}
