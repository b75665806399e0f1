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
#include <random>

#include "doctest.h"
#include "efbg/error.hpp"
#include "efbg/geometry.hpp"

using namespace efbg;

namespace {

CurvatureProfile constant_profile(double kappa, double tau, double theta, double length) {
  return CurvatureProfile({{0.0, kappa, theta, tau}}, length, Interpolation::kPiecewiseConstant);
}

// Unit-speed helix around the z axis with radius a and pitch parameter b.
Vec3 helix_point(double a, double b, double t) {
  return {a * std::cos(t), a * std::sin(t), b * t};
}

}  // namespace

TEST_CASE("straight profile integrates to a straight segment") {
  const auto c = integrate_frenet(constant_profile(0, 0, 0, 0.3), 1e-4);
  CHECK(c.points.size() == 3001);
  CHECK((c.points.back() - Vec3(0.3, 0, 0)).norm() < 1e-12);
  CHECK(c.points.front().norm() == 0.0);
}

TEST_CASE("constant curvature gives the closed-form circular arc") {
  const double k = 10, L = 0.3;
  const auto c = integrate_frenet(constant_profile(k, 0, 0, L), 1e-4);
  const Vec3 expect(std::sin(k * L) / k, (1 - std::cos(k * L)) / k, 0);
  CHECK((c.points.back() - expect).norm() < 1e-5);
  const double chord = c.points.back().norm();
  CHECK(chord == doctest::Approx(2 * 0.1 * std::sin(1.5)).epsilon(1e-9));
  // Consecutive spacing equals the step.
  for (std::size_t i = 1; i < c.points.size(); i += 97) {
    CHECK((c.points[i] - c.points[i - 1]).norm() == doctest::Approx(1e-4).epsilon(1e-6));
  }
}

TEST_CASE("bend direction rotates the arc plane") {
  const auto c = integrate_frenet(constant_profile(10, 0, kPi / 2, 0.3), 1e-4);
  const Vec3 tip = c.points.back();
  CHECK(std::abs(tip.y()) < 1e-9);
  CHECK(tip.z() == doctest::Approx((1 - std::cos(3.0)) / 10).epsilon(1e-6));
}

TEST_CASE("constant curvature and twist give a helix") {
  const double k = 8, t = 4;
  const double a = k / (k * k + t * t), b = t / (k * k + t * t);
  CHECK(a == doctest::Approx(0.1));
  CHECK(b == doctest::Approx(0.05));
  const auto c = integrate_frenet(constant_profile(k, t, 0, 0.3), 1e-4);
  // Axis direction and a point on it, from the initial Frenet frame.
  const Vec3 axis = Vec3(t, 0, k).normalized();
  const Vec3 centre = Vec3(0, a, 0);
  for (const auto& p : c.points) {
    const Vec3 d = p - centre;
    const double dist = (d - d.dot(axis) * axis).norm();
    CHECK(dist == doctest::Approx(a).epsilon(1e-6));
  }
  for (const auto& f : c.frames) {
    CHECK(std::abs(f.tangent.norm() - 1) < 1e-9);
    CHECK(std::abs(f.tangent.dot(f.m1)) < 1e-9);
    CHECK(std::abs(f.m1.dot(f.m2)) < 1e-9);
  }
}

TEST_CASE("integrate_frenet preconditions") {
  CHECK_THROWS_AS(integrate_frenet(constant_profile(1, 0, 0, 0.3), 0.1), Error);
  CHECK_THROWS_AS(integrate_frenet(constant_profile(1, 0, 0, 0.3), 0.0), Error);
  CHECK_THROWS_AS(CurvatureProfile({{0.0, -1.0, 0, 0}}, 0.3, Interpolation::kLinear), Error);
  CHECK_THROWS_AS(CurvatureProfile({{0.0, NAN, 0, 0}}, 0.3, Interpolation::kLinear), Error);
}

TEST_CASE("resample_spline on collinear points stays on the line") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) pts.emplace_back(0.01579 * i, 0, 0);
  const auto c = resample_spline(pts, 1e-4);
  for (const auto& p : c.points) {
    CHECK(std::hypot(p.y(), p.z()) < 1e-9);
  }
}

TEST_CASE("resample_spline point count follows the resolution") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) pts.emplace_back(0.3 * i / 19.0, 0, 0);
  CHECK(resample_spline(pts, 1e-4).points.size() == 3001);
}

TEST_CASE("resample_spline on a circle keeps radius") {
  const double r = 0.5;
  std::vector<Vec3> pts;
  for (int i = 0; i < 20; ++i) {
    const double a = 0.6 * i / 19.0;  // 0.3 m of arc
    pts.emplace_back(r * std::sin(a), r * (1 - std::cos(a)), 0);
  }
  const auto c = resample_spline(pts, 1e-4);
  double worst = 0;
  for (const auto& p : c.points) worst = std::max(worst, std::abs((p - Vec3(0, r, 0)).norm() - r));
  CHECK(worst < 1e-5);
  const auto est = estimate_curvature_torsion(c, 0.15);
  CHECK(est.kappa == doctest::Approx(2.0).epsilon(0.01));
  CHECK(std::abs(est.tau) < 0.02);
}

TEST_CASE("resample_spline rejects duplicates and short input") {
  std::vector<Vec3> pts{{0, 0, 0}, {0.1, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}};
  CHECK_THROWS_AS(resample_spline(pts), Error);
  std::vector<Vec3> few{{0, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}};
  CHECK_THROWS_AS(resample_spline(few), Error);
}

TEST_CASE("curvature estimation on a straight line reports zeros") {
  const auto c = integrate_frenet(constant_profile(0, 0, 0, 0.3), 1e-4);
  const auto e = estimate_curvature_torsion(c, 0.1);
  CHECK(e.kappa < 1e-6);
  CHECK(e.tau == 0.0);
  CHECK(e.theta == 0.0);
}

TEST_CASE("curvature estimation on a sampled helix") {
  const double a = 0.1, b = 0.05;
  const double c_len = std::hypot(a, b);
  std::vector<Vec3> pts;
  const double L = 0.3;
  for (int i = 0; i <= 3000; ++i) pts.push_back(helix_point(a, b, (L * i / 3000.0) / c_len));
  ArcLengthCurve curve{1e-4, pts, {}};
  const auto e = estimate_curvature_torsion(curve, 0.15);
  CHECK(e.kappa == doctest::Approx(8.0).epsilon(0.01));
  CHECK(e.tau == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("curvature estimation range check") {
  const auto c = integrate_frenet(constant_profile(1, 0, 0, 0.3), 1e-4);
  CHECK_THROWS_AS(estimate_curvature_torsion(c, 1e-4), Error);
  CHECK_THROWS_AS(estimate_curvature_torsion(c, 0.3), Error);
  CHECK_NOTHROW(estimate_curvature_torsion(c, 2e-4));
}

TEST_CASE("round trip recovers curvature, twist and direction") {
  std::vector<ProfileSample> samples;
  for (int i = 0; i <= 30; ++i) {
    const double s = 0.01 * i;
    samples.push_back({s, 5 + 3 * std::sin(10 * s), wrap_angle(0.3 + 2 * s), 2.0});
  }
  const CurvatureProfile prof(samples, 0.3, Interpolation::kLinear);
  const auto c = integrate_frenet(prof, 1e-4);
  for (double s : {0.05, 0.1, 0.15, 0.2, 0.25}) {
    const auto e = estimate_curvature_torsion(c, s);
    const auto truth = prof.at(s);
    CHECK(e.kappa == doctest::Approx(truth.kappa).epsilon(0.01));
  }
}

TEST_CASE("round trip of a pure helix recovers torsion within 2%") {
  const auto c = integrate_frenet(constant_profile(8, 4, 0, 0.3), 1e-4);
  const auto e = estimate_curvature_torsion(c, 0.15);
  CHECK(e.kappa == doctest::Approx(8).epsilon(0.01));
  CHECK(e.tau == doctest::Approx(4).epsilon(0.02));
}

TEST_CASE("estimated bend direction follows the material frame") {
  for (double th : {-2.5, -1.0, 0.0, 0.7, 2.0}) {
    const auto c = integrate_frenet(constant_profile(5, 0, th, 0.3), 1e-4);
    const auto e = estimate_curvature_torsion(c, 0.1);
    CHECK(std::abs(wrap_angle(e.theta - th)) < 1e-3);
  }
}

TEST_CASE("reconstruction from plane readings") {
  std::vector<PlaneReading> straight;
  for (int p = 0; p < 5; ++p) straight.push_back({0.05 * (p + 1), 0, 0});
  CHECK((reconstruct_from_plane_readings(straight, 0.3).points.back() - Vec3(0.3, 0, 0)).norm() <
        1e-12);

  const PlaneReading one{0.15, 10, 0};
  const auto arc = reconstruct_from_plane_readings(std::span(&one, 1), 0.3);
  const Vec3 expect(std::sin(3.0) / 10, (1 - std::cos(3.0)) / 10, 0);
  CHECK((arc.points.back() - expect).norm() * 1e3 < 0.01);

  CHECK_THROWS_AS(reconstruct_from_plane_readings(std::span<const PlaneReading>(), 0.3), Error);
}

TEST_CASE("reconstruction is exact for profiles constant on the partition") {
  std::vector<PlaneReading> rs{{0.05, 3, 0.2}, {0.10, 12, -1.0}, {0.15, 7, 2.5},
                               {0.20, 20, 0.0}, {0.25, 1, -3.0}};
  const auto prof = profile_from_plane_readings(rs, 0.3);
  const auto truth = integrate_frenet(prof, 1e-4);
  const auto rec = reconstruct_from_plane_readings(rs, 0.3);
  CHECK((truth.points.back() - rec.points.back()).norm() * 1e3 < 0.05);
  // Midpoint partition boundaries.
  CHECK(prof.at(0.074).kappa == 3);
  CHECK(prof.at(0.076).kappa == 12);
  CHECK(prof.at(0.29).kappa == 1);
}

TEST_CASE("markers_from_curve") {
  const auto c = integrate_frenet(constant_profile(0, 0, 0, 0.3), 1e-4);
  const auto m = markers_from_curve(c);
  REQUIRE(m.size() == 20);
  CHECK(m.coords[0].norm() < 1e-6);
  CHECK(m.coords[1].x() == doctest::Approx(300.0 / 19));
  CHECK(m.tip().x() == doctest::Approx(300.0));
  const auto two = markers_from_curve(c, 2);
  CHECK(two.size() == 2);
  CHECK(two.tip().x() == doctest::Approx(300.0));

  const auto arc = integrate_frenet(constant_profile(10, 0, 0, 0.3), 1e-4);
  const auto ma = markers_from_curve(arc);
  const Vec3 expect(1e3 * std::sin(3.0) / 10, 1e3 * (1 - std::cos(3.0)) / 10, 0);
  CHECK((ma.tip() - expect).norm() < 0.01);
  for (std::size_t i = 1; i < ma.size(); ++i) {
    CHECK((ma.coords[i] - ma.coords[i - 1]).norm() <= 300.0 / 19 + 1e-9);
  }
}

TEST_CASE("chord never exceeds arc length") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 30), th(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ProfileSample> samples;
    for (int i = 0; i < 6; ++i) samples.push_back({0.05 * i, u(rng), th(rng), 0});
    const auto c = integrate_frenet(CurvatureProfile(samples, 0.3, Interpolation::kLinear), 1e-3);
    CHECK(c.points.back().norm() <= 0.3 + 1e-12);
  }
}

TEST_CASE("wrap_angle maps into [-pi, pi)") {
  CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
  CHECK(wrap_angle(3 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_angle(-kPi) == doctest::Approx(-kPi));
}
