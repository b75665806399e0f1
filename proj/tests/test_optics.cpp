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
#include <set>

#include "doctest.h"
#include "efbg/baseline.hpp"
#include "efbg/error.hpp"
#include "efbg/optics.hpp"

using namespace efbg;

namespace {

CurvatureProfile straight(double length = 0.3) {
  return CurvatureProfile({{0.0, 0.0, 0.0, 0.0}}, length, Interpolation::kPiecewiseConstant);
}

// Constant bend around each plane (+-5 mm), straight elsewhere.
CurvatureProfile plane_bends(const std::array<double, kPlaneCount>& kappa,
                             const std::array<double, kPlaneCount>& theta) {
  const auto layout = default_layout();
  std::vector<ProfileSample> s{{0.0, 0.0, 0.0, 0.0}};
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const double c = layout.plane_positions[p];
    s.push_back({c - 0.005, kappa[p], theta[p], 0.0});
    s.push_back({c + 0.005, 0.0, 0.0, 0.0});
  }
  return CurvatureProfile(s, 0.3, Interpolation::kPiecewiseConstant);
}

std::vector<double> marker_rmse_mm(const MarkerShape& a, const MarkerShape& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a.coords[i] - b.coords[i]).squaredNorm();
  return {std::sqrt(acc / static_cast<double>(a.size()))};
}

}  // namespace

TEST_CASE("default layout") {
  const auto l = default_layout();
  CHECK_NOTHROW(l.validate());
  CHECK(l.grid.front() == 800.0);
  CHECK(l.grid.back() == 890.0);
  CHECK(l.grid[1] - l.grid[0] == doctest::Approx(90.0 / 189.0));
  CHECK(l.fbgs[0].lambda_bragg_nm == 813);
  CHECK(l.fbgs[1].lambda_bragg_nm == 817);
  CHECK(l.fbgs[2].lambda_bragg_nm == 821);
  CHECK(l.fbgs[14].lambda_bragg_nm == 869);
  for (std::size_t p = 1; p < kPlaneCount; ++p) {
    CHECK(l.plane_positions[p] - l.plane_positions[p - 1] == doctest::Approx(0.05));
  }
  CHECK(l.length == 0.3);

  auto bad = l;
  bad.fbgs[4].lambda_bragg_nm = 813;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = l;
  bad.fbgs[4].phi = 0.3;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("straight fiber gives equal co-located peaks") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  Rng rng(1);
  const auto scan = simulate_scan(straight(), l, fx, rng);
  CHECK(*std::max_element(scan.intensities.begin(), scan.intensities.end()) == 1.0);
  const auto I = read_plane_intensities(scan, l);
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    CHECK(std::abs(I[3 * p] - I[3 * p + 1]) < 1e-9);
    CHECK(std::abs(I[3 * p] - I[3 * p + 2]) < 1e-9);
  }
}

TEST_CASE("mode-field intensity ratio follows the cosine law") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  const auto prof = plane_bends({5, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
  const auto raw = raw_spectrum(prof, l, fx);
  const SpectrumScan scan{raw};
  const auto I = read_plane_intensities(scan, l);
  const double cr = fx.mode_field_gain * 2e-6;
  // Plane 0: index 1 is phi = 180 deg, index 2 is phi = 0.
  CHECK(I[2] / I[1] == doctest::Approx((1 - 5 * cr) / (1 + 5 * cr)).epsilon(1e-9));
  CHECK(I[2] == doctest::Approx(0.9 * (1 - 5 * cr)).epsilon(1e-9));
}

TEST_CASE("cosine law holds for random shapes with confounders off") {
  const auto l = default_layout();
  const auto fx = EffectsConfig::confounders_off();
  const ShapeSamplerConfig cfg;
  const double cr = fx.mode_field_gain * 2e-6;
  for (int n = 0; n < 100; ++n) {
    Rng rng = derived_rng(11, static_cast<std::uint64_t>(n));
    const auto prof = sample_random_shape(cfg, rng);
    const auto I = read_plane_intensities(SpectrumScan{raw_spectrum(prof, l, fx)}, l);
    const auto planes = plane_readings_of(prof, l);
    for (std::size_t i = 0; i < kFbgCount; ++i) {
      const auto& pr = planes[i / 3];
      const double expect = 0.9 * (1 - cr * pr.kappa * std::cos(pr.theta - l.fbgs[i].phi));
      CHECK(I[i] == doctest::Approx(expect).epsilon(1e-7));
    }
  }
}

TEST_CASE("confounders change off-resonance spectrum") {
  const auto l = default_layout();
  auto off = EffectsConfig::confounders_off();
  auto on = off;
  on.bendloss.enabled = on.pdl.enabled = on.fresnel.enabled = true;
  Rng rng(5);
  const auto prof = sample_random_shape(ShapeSamplerConfig{}, rng);
  const auto a = clean_spectrum(prof, l, off);
  const auto b = clean_spectrum(prof, l, on);
  double worst = 0;
  for (std::size_t j = 0; j < kGridSize; ++j) {
    bool near = false;
    for (const auto& f : l.fbgs) near |= std::abs(l.grid[j] - f.lambda_bragg_nm) <= 2 * f.peak_fwhm_nm;
    if (!near) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  CHECK(worst > 0);
}

TEST_CASE("bend loss never raises a peak") {
  const auto l = default_layout();
  auto off = EffectsConfig::confounders_off();
  auto on = off;
  on.bendloss.enabled = true;
  for (int n = 0; n < 20; ++n) {
    Rng rng = derived_rng(3, static_cast<std::uint64_t>(n));
    const auto prof = sample_random_shape(ShapeSamplerConfig{}, rng);
    const auto a = read_plane_intensities(SpectrumScan{raw_spectrum(prof, l, off)}, l);
    const auto b = read_plane_intensities(SpectrumScan{raw_spectrum(prof, l, on)}, l);
    for (std::size_t i = 0; i < kFbgCount; ++i) CHECK(b[i] <= a[i] * (1 + 1e-12));
  }
}

TEST_CASE("bends after the last plane reach the spectrum only through the Fresnel tail") {
  const auto l = default_layout();
  const auto bent = template_shape(0.26, 0.30, 1.0 / 30.0, l, kPi / 2);
  auto fx = EffectsConfig{};
  fx.noise_sigma = 0.005;
  fx.fresnel.enabled = true;
  const auto a = clean_spectrum(straight(), l, fx);
  const auto b = clean_spectrum(bent, l, fx);
  double diff = 0;
  for (std::size_t j = 0; j < kGridSize; ++j) diff = std::max(diff, std::abs(a[j] - b[j]));
  CHECK(diff > 10 * fx.noise_sigma);

  fx.fresnel.enabled = false;
  const auto c = clean_spectrum(straight(), l, fx);
  const auto d = clean_spectrum(bent, l, fx);
  for (std::size_t j = 0; j < kGridSize; ++j) CHECK(c[j] == d[j]);
}

TEST_CASE("simulate_sample noise behaviour") {
  const auto l = default_layout();
  auto fx = EffectsConfig{};
  fx.noise_sigma = 0;
  Rng rng(9);
  const auto prof = sample_random_shape(ShapeSamplerConfig{}, rng);
  const auto s = simulate_sample(prof, l, fx, rng);
  CHECK(s.scans[0].intensities == s.scans[1].intensities);
  CHECK(s.scans[1].intensities == s.scans[2].intensities);
  CHECK(s.shape.size() == 20);

  fx.noise_sigma = 0.01;
  const auto clean = clean_spectrum(prof, l, fx);
  // Per-element spread over many draws, far from the peak so normalization barely matters.
  double acc = 0;
  int count = 0;
  std::size_t j = 0;
  while (clean[j] < 0.3 || clean[j] > 0.6) ++j;
  const int draws = 4000;
  std::vector<double> v;
  for (int n = 0; n < draws; ++n) v.push_back(simulate_scan(prof, l, fx, rng).intensities[j]);
  double mean = 0;
  for (double x : v) mean += x / draws;
  for (double x : v) {
    acc += (x - mean) * (x - mean);
    ++count;
  }
  const double sd = std::sqrt(acc / (count - 1));
  CHECK(sd == doctest::Approx(0.01).epsilon(0.1));
  const auto s2 = simulate_sample(prof, l, fx, rng);
  CHECK(s2.scans[0].intensities != s2.scans[1].intensities);
  for (const auto& sc : s2.scans) {
    CHECK(*std::max_element(sc.intensities.begin(), sc.intensities.end()) == 1.0);
    CHECK(*std::min_element(sc.intensities.begin(), sc.intensities.end()) >= 0.0);
  }
}

TEST_CASE("random shapes stay in the curvature range and are seeded") {
  const ShapeSamplerConfig cfg;
  double lo = 1e9, hi = 0;
  for (int n = 0; n < 1000; ++n) {
    Rng rng = derived_rng(21, static_cast<std::uint64_t>(n));
    const auto p = sample_random_shape(cfg, rng);
    for (const auto& s : p.samples()) {
      lo = std::min(lo, s.kappa);
      hi = std::max(hi, s.kappa);
    }
  }
  CHECK(lo >= 0.58);
  CHECK(hi <= 33.5);

  Rng a(4), b(4), c(5);
  const auto pa = sample_random_shape(cfg, a);
  const auto pb = sample_random_shape(cfg, b);
  const auto pc = sample_random_shape(cfg, c);
  double same = 0, diff = 0;
  for (std::size_t i = 0; i < pa.samples().size(); ++i) {
    same = std::max(same, std::abs(pa.samples()[i].kappa - pb.samples()[i].kappa));
    diff = std::max(diff, std::abs(pa.samples()[i].kappa - pc.samples()[i].kappa));
    CHECK(pa.samples()[i].theta == pb.samples()[i].theta);
  }
  CHECK(same == 0.0);
  CHECK(diff > 0.1);
}

TEST_CASE("trajectories") {
  ShapeSamplerConfig cfg;
  cfg.trajectory_correlation = 0.0;
  Rng a(8), b(8);
  const auto traj = sample_trajectory(cfg, 3, a);
  for (int i = 0; i < 3; ++i) {
    const auto ind = sample_random_shape(cfg, b);
    for (std::size_t k = 0; k < ind.samples().size(); ++k) {
      CHECK(ind.samples()[k].kappa == traj[static_cast<std::size_t>(i)].samples()[k].kappa);
    }
  }
  Rng c(8);
  CHECK(sample_trajectory(cfg, 1, c).size() == 1);

  cfg.trajectory_correlation = 0.99;
  Rng d(12);
  const auto walk = sample_trajectory(cfg, 100, d);
  std::vector<double> rmse;
  MarkerShape prev = markers_from_curve(integrate_frenet(walk[0], 1e-4));
  for (std::size_t i = 1; i < walk.size(); ++i) {
    auto cur = markers_from_curve(integrate_frenet(walk[i], 1e-4));
    rmse.push_back(marker_rmse_mm(prev, cur)[0]);
    prev = std::move(cur);
  }
  std::nth_element(rmse.begin(), rmse.begin() + 49, rmse.end());
  CHECK(rmse[49] < 5.0);
}

TEST_CASE("trajectory sessions restart the walk") {
  const auto l = default_layout();
  ShapeSamplerConfig cfg;
  cfg.trajectory_correlation = 0.999;
  EffectsConfig fx = EffectsConfig::confounders_off();
  const auto one = generate_dataset(ScenarioKind::kTrajectory, 12, l, fx, cfg, 4);
  cfg.trajectory_session = 6;
  const auto two = generate_dataset(ScenarioKind::kTrajectory, 12, l, fx, cfg, 4);
  // The first session is identical; the second starts elsewhere.
  for (std::size_t i = 0; i < 6; ++i) CHECK(two.records[i].shape_mm == one.records[i].shape_mm);
  auto step = [](const SampleRecord& a, const SampleRecord& b) {
    double s = 0;
    for (std::size_t k = 0; k < kTargetSize; ++k) s += std::pow(a.shape_mm[k] - b.shape_mm[k], 2);
    return std::sqrt(s / kMarkerCount);
  };
  CHECK(step(two.records[6], two.records[5]) > 10 * step(two.records[5], two.records[4]));
  CHECK(step(two.records[7], two.records[6]) < 1.0);
}

TEST_CASE("template shapes") {
  const auto l = default_layout();
  const auto t = template_shape(0.16, 0.19, 0.05, l);
  CHECK(t.at(0.175).kappa == doctest::Approx(20.0));
  for (double s : l.plane_positions) CHECK(t.at(s).kappa == 0.0);
  const auto tail = template_shape(0.26, 0.29, 0.05, l);
  for (const auto& r : plane_readings_of(tail, l)) CHECK(r.kappa == 0.0);
  const auto flat = template_shape(0.16, 0.19, INFINITY, l);
  CHECK(flat.max_kappa() == 0.0);
  CHECK_THROWS_AS(template_shape(0.16, 0.162, 0.05, l), Error);

  const auto segs = default_template_segments(l);
  REQUIRE(segs.size() == 4);
  CHECK(segs[1].a == doctest::Approx(0.16));
  CHECK(segs[1].b == doctest::Approx(0.19));
  CHECK(segs[3].a == doctest::Approx(0.26));
  CHECK(segs[3].b == doctest::Approx(0.29));
}

TEST_CASE("generate_dataset") {
  const auto l = default_layout();
  const EffectsConfig fx;
  const ShapeSamplerConfig cfg;
  const auto t = generate_dataset(ScenarioKind::kTemplate, 1, l, fx, cfg, 7);
  CHECK(t.size() == 320);
  std::set<std::uint32_t> groups;
  for (const auto& r : t.records) groups.insert(r.group);
  CHECK(groups.size() == 8);

  const auto a = generate_dataset(ScenarioKind::kRandom, 40, l, fx, cfg, 7, 1);
  const auto b = generate_dataset(ScenarioKind::kRandom, 40, l, fx, cfg, 7, 3);
  CHECK(a.records == b.records);
  std::set<std::uint64_t> seeds;
  for (const auto& r : a.records) seeds.insert(r.seed);
  CHECK(seeds.size() == 40);

  const auto c = generate_dataset(ScenarioKind::kTrajectory, 20, l, fx, cfg, 7, 2);
  const auto d = generate_dataset(ScenarioKind::kTrajectory, 20, l, fx, cfg, 7, 1);
  CHECK(c.records == d.records);
  CHECK_THROWS_AS(parse_scenario("spiral"), Error);
  CHECK_THROWS_AS(generate_dataset(ScenarioKind::kRandom, 0, l, fx, cfg, 7), Error);
}
