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

#include "efbg/geometry.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "efbg/error.hpp"

namespace efbg {

double wrap_angle(double a) noexcept {
  double r = a - 2.0 * kPi * std::floor((a + kPi) / (2.0 * kPi));
  if (r >= kPi) r -= 2.0 * kPi;
  if (r < -kPi) r = -kPi;
  return r;
}

// ---------------------------------------------------------------------------
// CurvatureProfile

CurvatureProfile::CurvatureProfile(std::vector<ProfileSample> samples, double length,
                                   Interpolation interpolation)
    : samples_(std::move(samples)), length_(length), interpolation_(interpolation) {
  require(std::isfinite(length_) && length_ > 0, Errc::kInvalidInput,
          "profile length must be positive and finite");
  require(!samples_.empty(), Errc::kInvalidInput, "profile has no samples");
  require(samples_.front().s == 0.0, Errc::kInvalidInput, "first profile sample must be at s = 0");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& p = samples_[i];
    require(std::isfinite(p.s) && std::isfinite(p.kappa) && std::isfinite(p.theta) &&
                std::isfinite(p.tau),
            Errc::kInvalidInput, "non-finite profile value at sample " + std::to_string(i));
    require(p.s >= 0 && p.s <= length_, Errc::kInvalidInput, "profile sample outside [0, length]");
    require(p.kappa >= 0, Errc::kInvalidInput, "negative curvature in profile");
    require(p.theta >= -kPi && p.theta < kPi, Errc::kInvalidInput,
            "bend direction outside [-pi, pi)");
    if (i > 0) {
      require(p.s > samples_[i - 1].s, Errc::kInvalidInput,
              "profile arc positions must be strictly increasing");
    }
  }
}

ProfileSample CurvatureProfile::at(double s) const {
  s = std::clamp(s, 0.0, length_);
  auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                             [](double v, const ProfileSample& p) { return v < p.s; });
  const std::size_t hi = static_cast<std::size_t>(it - samples_.begin());
  const std::size_t lo = hi - 1;  // samples_[0].s == 0 so hi >= 1
  ProfileSample out = samples_[lo];
  if (interpolation_ == Interpolation::kLinear && hi < samples_.size()) {
    const auto& a = samples_[lo];
    const auto& b = samples_[hi];
    const double t = (s - a.s) / (b.s - a.s);
    out.kappa = a.kappa + t * (b.kappa - a.kappa);
    out.tau = a.tau + t * (b.tau - a.tau);
    out.theta = wrap_angle(a.theta + t * wrap_angle(b.theta - a.theta));
  }
  out.s = s;
  return out;
}

double CurvatureProfile::max_kappa() const noexcept {
  double m = 0;
  for (const auto& p : samples_) m = std::max(m, p.kappa);
  return m;
}

// ---------------------------------------------------------------------------
// ArcLengthCurve

Vec3 ArcLengthCurve::point_at(double s) const {
  require(!points.empty(), Errc::kInvalidInput, "empty curve");
  if (points.size() == 1) return points.front();
  const double u = std::clamp(s / step, 0.0, static_cast<double>(points.size() - 1));
  std::size_t i = static_cast<std::size_t>(std::floor(u));
  if (i >= points.size() - 1) i = points.size() - 2;
  const double t = u - static_cast<double>(i);
  return (1.0 - t) * points[i] + t * points[i + 1];
}

namespace {

std::size_t uniform_count(double length, double step) {
  return static_cast<std::size_t>(std::floor(length / step + 1e-9)) + 1;
}

void orthonormalize(Frame& f) {
  f.tangent.normalize();
  f.m1 = (f.m1 - f.m1.dot(f.tangent) * f.tangent).normalized();
  f.m2 = f.tangent.cross(f.m1);
}

struct FrameState {
  Vec3 r, t, m1, m2;
};

FrameState operator+(const FrameState& a, const FrameState& b) {
  return {a.r + b.r, a.t + b.t, a.m1 + b.m1, a.m2 + b.m2};
}
FrameState operator*(double k, const FrameState& a) {
  return {k * a.r, k * a.t, k * a.m1, k * a.m2};
}

FrameState frame_rate(const CurvatureProfile& profile, double s, const FrameState& x) {
  const ProfileSample p = profile.at(s);
  const double ku = p.kappa * std::cos(p.theta);
  const double kv = p.kappa * std::sin(p.theta);
  return {x.t, ku * x.m1 + kv * x.m2, -ku * x.t + p.tau * x.m2, -kv * x.t - p.tau * x.m1};
}

}  // namespace

ArcLengthCurve integrate_frenet(const CurvatureProfile& profile, double step) {
  require(std::isfinite(step) && step > 0, Errc::kInvalidInput, "integration step must be positive");
  require(step <= profile.length() / 10.0 * (1 + 1e-12), Errc::kInvalidInput,
          "integration step must not exceed length/10");
  const std::size_t n = uniform_count(profile.length(), step);

  ArcLengthCurve curve;
  curve.step = step;
  curve.points.reserve(n);
  curve.frames.reserve(n);

  FrameState x{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  curve.points.push_back(x.r);
  curve.frames.push_back({x.t, x.m1, x.m2});
  for (std::size_t i = 1; i < n; ++i) {
    const double s = static_cast<double>(i - 1) * step;
    const FrameState k1 = frame_rate(profile, s, x);
    const FrameState k2 = frame_rate(profile, s + 0.5 * step, x + (0.5 * step) * k1);
    const FrameState k3 = frame_rate(profile, s + 0.5 * step, x + (0.5 * step) * k2);
    const FrameState k4 = frame_rate(profile, s + step, x + step * k3);
    x = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Frame f{x.t, x.m1, x.m2};
    orthonormalize(f);
    x.t = f.tangent;
    x.m1 = f.m1;
    x.m2 = f.m2;
    curve.points.push_back(x.r);
    curve.frames.push_back(f);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Spline resampling

namespace {

// Cubic a + b t + c t^2 + d t^3 per coordinate on one chord interval.
struct SplineSegment {
  Vec3 a, b, c, d;
  double h = 0;

  Vec3 value(double t) const { return a + t * (b + t * (c + t * d)); }
  Vec3 deriv(double t) const { return b + t * (2.0 * c + 3.0 * t * d); }
};

constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

double arc_length(const SplineSegment& seg, double t) {
  double sum = 0;
  const double half = 0.5 * t;
  for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
    sum += kGlWeights[k] * seg.deriv(half * (kGlNodes[k] + 1.0)).norm();
  }
  return half * sum;
}

std::vector<SplineSegment> not_a_knot_spline(std::span<const Vec3> pts) {
  const std::size_t n = pts.size();
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = (pts[i + 1] - pts[i]).norm();

  // Unknowns: second derivatives M_0..M_{n-1}.
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 3);
  auto idx = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

  trip.emplace_back(0, 0, h[1]);
  trip.emplace_back(0, 1, -(h[0] + h[1]));
  trip.emplace_back(0, 2, h[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    trip.emplace_back(idx(i), idx(i - 1), h[i - 1]);
    trip.emplace_back(idx(i), idx(i), 2.0 * (h[i - 1] + h[i]));
    trip.emplace_back(idx(i), idx(i + 1), h[i]);
    const Vec3 g = 6.0 * ((pts[i + 1] - pts[i]) / h[i] - (pts[i] - pts[i - 1]) / h[i - 1]);
    rhs.row(idx(i)) = g.transpose();
  }
  const std::size_t e = n - 1;
  trip.emplace_back(idx(e), idx(e - 2), h[e - 1]);
  trip.emplace_back(idx(e), idx(e - 1), -(h[e - 2] + h[e - 1]));
  trip.emplace_back(idx(e), idx(e), h[e - 2]);
  a.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  require(lu.info() == Eigen::Success, Errc::kInvalidInput, "spline system is singular");
  const Eigen::MatrixXd m = lu.solve(rhs);

  std::vector<SplineSegment> segs(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3 mi = m.row(idx(i)).transpose();
    const Vec3 mj = m.row(idx(i + 1)).transpose();
    auto& s = segs[i];
    s.h = h[i];
    s.a = pts[i];
    s.b = (pts[i + 1] - pts[i]) / h[i] - h[i] * (2.0 * mi + mj) / 6.0;
    s.c = 0.5 * mi;
    s.d = (mj - mi) / (6.0 * h[i]);
  }
  return segs;
}

double invert_arc_length(const SplineSegment& seg, double target) {
  double lo = 0, hi = seg.h;
  double t = std::clamp(target, 0.0, seg.h);
  for (int it = 0; it < 60; ++it) {
    const double f = arc_length(seg, t) - target;
    if (f > 0) hi = t; else lo = t;
    const double speed = seg.deriv(t).norm();
    double next = t - f / speed;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * seg.h) return next;
    t = next;
  }
  return t;
}

Vec3 any_normal_to(const Vec3& t) {
  Vec3 m = Vec3::UnitY() - Vec3::UnitY().dot(t) * t;
  if (m.norm() < 1e-6) m = Vec3::UnitZ() - Vec3::UnitZ().dot(t) * t;
  return m.normalized();
}

// Rotation-minimizing frames by double reflection, starting from the base
// frame projected onto the first tangent.
std::vector<Frame> transport_frames(const std::vector<Vec3>& points,
                                    const std::vector<Vec3>& tangents) {
  std::vector<Frame> frames;
  frames.reserve(points.size());
  Frame f{tangents[0], any_normal_to(tangents[0]), Vec3::Zero()};
  f.m2 = f.tangent.cross(f.m1);
  frames.push_back(f);
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const Vec3 v1 = points[k + 1] - points[k];
    const double c1 = v1.squaredNorm();
    const Frame& prev = frames.back();
    const Vec3 rl = prev.m1 - (2.0 / c1) * v1.dot(prev.m1) * v1;
    const Vec3 tl = prev.tangent - (2.0 / c1) * v1.dot(prev.tangent) * v1;
    const Vec3 v2 = tangents[k + 1] - tl;
    const double c2 = v2.squaredNorm();
    Frame next;
    next.tangent = tangents[k + 1];
    next.m1 = c2 > 1e-30 ? Vec3(rl - (2.0 / c2) * v2.dot(rl) * v2) : rl;
    orthonormalize(next);
    frames.push_back(next);
  }
  return frames;
}

}  // namespace

ArcLengthCurve resample_spline(std::span<const Vec3> points, double resolution) {
  require(points.size() >= 4, Errc::kInvalidInput, "spline resampling needs at least 4 points");
  require(std::isfinite(resolution) && resolution > 0, Errc::kInvalidInput,
          "resolution must be positive");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].allFinite(), Errc::kInvalidInput, "non-finite spline point");
    if (i > 0) {
      require((points[i] - points[i - 1]).norm() > 1e-12, Errc::kInvalidInput,
              "duplicate consecutive spline points at index " + std::to_string(i));
    }
  }
  const auto segs = not_a_knot_spline(points);
  std::vector<double> cum(segs.size() + 1, 0.0);
  for (std::size_t i = 0; i < segs.size(); ++i) cum[i + 1] = cum[i] + arc_length(segs[i], segs[i].h);

  const std::size_t n = uniform_count(cum.back(), resolution);
  ArcLengthCurve curve;
  curve.step = resolution;
  curve.points.reserve(n);
  curve.frames.reserve(n);
  std::vector<Vec3> tangents;
  tangents.reserve(n);

  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) * resolution;
    while (seg + 1 < segs.size() && s > cum[seg + 1]) ++seg;
    const double t = invert_arc_length(segs[seg], s - cum[seg]);
    curve.points.push_back(segs[seg].value(t));
    tangents.push_back(segs[seg].deriv(t).normalized());
  }

  curve.frames = transport_frames(curve.points, tangents);
  return curve;
}

// ---------------------------------------------------------------------------
// Estimation and reconstruction

CurvatureEstimate estimate_curvature_torsion(const ArcLengthCurve& curve, double s_query) {
  const double h = curve.step;
  const std::size_t n = curve.points.size();
  require(n >= 5 && h > 0, Errc::kOutOfRange, "curve too short for central stencils");
  const double tol = 1e-9 * h;
  require(s_query >= 2.0 * h - tol && s_query <= curve.length() - 2.0 * h + tol,
          Errc::kOutOfRange, "query outside the central-stencil range");
  auto i = static_cast<std::size_t>(std::llround(s_query / h));
  i = std::clamp<std::size_t>(i, 2, n - 3);

  const auto& p = curve.points;
  const Vec3 d1 = (p[i + 1] - p[i - 1]) / (2.0 * h);
  const Vec3 d2 = (p[i + 1] - 2.0 * p[i] + p[i - 1]) / (h * h);
  const Vec3 d3 = (p[i + 2] - 2.0 * p[i + 1] + 2.0 * p[i - 1] - p[i - 2]) / (2.0 * h * h * h);

  const Vec3 cr = d1.cross(d2);
  const double speed = d1.norm();
  CurvatureEstimate out;
  out.kappa = cr.norm() / (speed * speed * speed);
  if (out.kappa < kKappaStraightEps) return {out.kappa, 0.0, 0.0};
  out.tau = cr.dot(d3) / cr.squaredNorm();

  const Vec3 t = d1 / speed;
  const Vec3 normal = d2 - d2.dot(t) * t;
  Frame f;
  if (curve.frames.size() == n) {
    f = curve.frames[i];
  } else {
    // No stored frames: transport one along finite-difference tangents.
    std::vector<Vec3> pts(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    std::vector<Vec3> tangents(i + 1);
    for (std::size_t k = 0; k <= i; ++k) {
      tangents[k] = (p[k + 1] - p[k == 0 ? 0 : k - 1]).normalized();
    }
    f = transport_frames(pts, tangents).back();
  }
  out.theta = wrap_angle(std::atan2(normal.dot(f.m2), normal.dot(f.m1)));
  return out;
}

CurvatureProfile profile_from_plane_readings(std::span<const PlaneReading> readings,
                                             double length) {
  require(!readings.empty(), Errc::kInvalidInput, "no plane readings");
  require(std::isfinite(length) && length > 0, Errc::kInvalidInput, "length must be positive");
  std::vector<ProfileSample> samples;
  samples.reserve(readings.size());
  for (std::size_t j = 0; j < readings.size(); ++j) {
    const auto& r = readings[j];
    require(r.s >= 0 && r.s < length, Errc::kInvalidInput, "plane reading outside [0, length)");
    if (j > 0) {
      require(r.s > readings[j - 1].s, Errc::kInvalidInput, "plane readings must be sorted by s");
    }
    const double start = j == 0 ? 0.0 : 0.5 * (readings[j - 1].s + r.s);
    const bool straight = r.kappa < kKappaStraightEps;
    samples.push_back({start, r.kappa, straight ? 0.0 : wrap_angle(r.theta), 0.0});
  }
  return CurvatureProfile(std::move(samples), length, Interpolation::kPiecewiseConstant);
}

ArcLengthCurve reconstruct_from_plane_readings(std::span<const PlaneReading> readings,
                                               double length, double step) {
  return integrate_frenet(profile_from_plane_readings(readings, length), step);
}

MarkerShape markers_from_curve(const ArcLengthCurve& curve, std::size_t n) {
  require(n >= 2, Errc::kInvalidInput, "need at least two markers");
  require(!curve.points.empty(), Errc::kInvalidInput, "empty curve");
  MarkerShape shape;
  shape.coords.reserve(n);
  const double len = curve.length();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 p = k + 1 == n ? curve.points.back()
                              : curve.point_at(len * static_cast<double>(k) /
                                               static_cast<double>(n - 1));
    shape.coords.push_back(1000.0 * p);
  }
  return shape;
}

}  // namespace efbg
