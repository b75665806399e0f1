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

// Intrinsic-coordinate curve machinery: curvature/bend-direction/twist
// profiles, their integration into centerlines, spline resampling and
// finite-difference curvature estimation.
//
// Frame convention: the base of every curve sits at the origin with tangent
// +x, first material axis +y and second material axis +z. A bend direction
// theta is measured from the first material axis towards the second.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <vector>

namespace efbg {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Curvature below this (1/m) is treated as straight: torsion and bend
/// direction are reported as zero.
inline constexpr double kKappaStraightEps = 1e-4;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a) noexcept;

enum class Interpolation { kPiecewiseConstant, kLinear };

struct ProfileSample {
  double s = 0;      // arc length, m
  double kappa = 0;  // curvature, 1/m
  double theta = 0;  // bend direction in the material frame, rad
  double tau = 0;    // material twist rate, 1/m
};

class CurvatureProfile {
 public:
  /// Validates: non-empty, s strictly increasing inside [0, length], first
  /// sample at s = 0, kappa >= 0, theta in [-pi, pi), all finite, length > 0.
  CurvatureProfile(std::vector<ProfileSample> samples, double length,
                   Interpolation interpolation);

  /// Value at arc length s (clamped into [0, length]). Linear mode
  /// interpolates theta along the shorter arc.
  ProfileSample at(double s) const;

  double length() const noexcept { return length_; }
  Interpolation interpolation() const noexcept { return interpolation_; }
  std::span<const ProfileSample> samples() const noexcept { return samples_; }

  /// Largest sampled curvature.
  double max_kappa() const noexcept;

 private:
  std::vector<ProfileSample> samples_;
  double length_;
  Interpolation interpolation_;
};

struct Frame {
  Vec3 tangent = Vec3::UnitX();
  Vec3 m1 = Vec3::UnitY();
  Vec3 m2 = Vec3::UnitZ();
};

/// Points at uniform arc-length spacing with one material frame per point.
struct ArcLengthCurve {
  double step = 0;
  std::vector<Vec3> points;
  std::vector<Frame> frames;

  double length() const noexcept {
    return points.empty() ? 0.0 : step * static_cast<double>(points.size() - 1);
  }
  /// Linear interpolation between the bracketing samples.
  Vec3 point_at(double s) const;
};

/// Marker coordinates in millimetres, relative to the base frame.
struct MarkerShape {
  std::vector<Vec3> coords;

  std::size_t size() const noexcept { return coords.size(); }
  const Vec3& tip() const { return coords.back(); }
};

inline constexpr std::size_t kMarkerCount = 20;

struct PlaneReading {
  double s = 0;
  double kappa = 0;
  double theta = 0;
};

struct CurvatureEstimate {
  double kappa = 0;
  double tau = 0;
  double theta = 0;
};

/// Integrates the material-frame ODE with fixed-step RK4 and per-step
/// re-orthonormalization. Produces floor(length/step)+1 points.
ArcLengthCurve integrate_frenet(const CurvatureProfile& profile, double step);

/// Not-a-knot cubic spline through the points (chord-length parameter),
/// re-sampled at uniform arc length. Frames are rotation-minimizing,
/// transported from the base frame projected onto the first tangent.
ArcLengthCurve resample_spline(std::span<const Vec3> points, double resolution = 1e-4);

/// Central finite-difference curvature, torsion and bend direction at the
/// sample nearest to s_query.
CurvatureEstimate estimate_curvature_torsion(const ArcLengthCurve& curve, double s_query);

/// Piecewise-constant profile on the midpoint partition between readings,
/// zero twist, integrated with integrate_frenet.
CurvatureProfile profile_from_plane_readings(std::span<const PlaneReading> readings,
                                             double length);
ArcLengthCurve reconstruct_from_plane_readings(std::span<const PlaneReading> readings,
                                               double length, double step = 1e-4);

/// n markers at uniform arc spacing over the whole curve, in mm.
MarkerShape markers_from_curve(const ArcLengthCurve& curve, std::size_t n = kMarkerCount);

}  // namespace efbg
