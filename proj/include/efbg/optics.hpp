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

// Forward model of an edge-FBG sensor: a bent fiber shape in, three
// normalized 190-element reflection spectra out. Every confounding effect
// has its own switch so experiments can attribute errors to mechanisms.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "efbg/geometry.hpp"
#include "efbg/rng.hpp"

namespace efbg {

inline constexpr std::size_t kPlaneCount = 5;
inline constexpr std::size_t kFbgsPerPlane = 3;
inline constexpr std::size_t kFbgCount = kPlaneCount * kFbgsPerPlane;
inline constexpr std::size_t kGridSize = 190;
inline constexpr std::size_t kScanCount = 3;
inline constexpr std::size_t kFeatureSize = kScanCount * kGridSize;
inline constexpr std::size_t kTargetSize = kMarkerCount * 3;

/// Arc-length step used when turning simulated profiles into marker shapes.
inline constexpr double kShapeStep = 1e-4;

struct FbgDescriptor {
  int plane_index = 0;
  double lambda_bragg_nm = 0;
  double phi = 0;  // angular position in the material frame, rad
  double r_offset_um = 2.0;
  double peak_fwhm_nm = 1.0;
  double base_amplitude = 0.9;
};

struct SensorLayout {
  double length = 0.30;  // m
  std::array<double, kPlaneCount> plane_positions{};
  std::vector<FbgDescriptor> fbgs;  // plane-major, kFbgCount entries
  std::vector<double> grid;         // kGridSize wavelengths, nm

  /// Throws kInvalidInput when an invariant is violated.
  void validate() const;
  double last_plane() const noexcept { return plane_positions.back(); }
};

SensorLayout default_layout();

struct BendLossConfig {
  bool enabled = true;
  double base = 0.01;             // loss per unit of integrated kappa^2, m
  double short_period_nm = 5.0;   // coating-air re-injection ripple
  double long_period_nm = 23.0;   // cladding-coating ripple
  double short_depth = 0.05;
  double long_depth = 0.10;
  double short_phase_gain = 1.0;  // rad per rad of integrated directional curvature
  double long_phase_gain = 2.0;
};

struct PdlConfig {
  bool enabled = true;
  double depth = 0.05;
  double period_nm = 37.0;
  double birefringence_gain = 0.05;  // rad per (1/m) of integrated kappa^2
};

struct CladdingConfig {
  bool enabled = true;
  double depth = 0.10;
  double offset_nm = 0.6;
  double width_nm = 0.5;
  double curvature_gain = 1.0 / 33.5;  // depth scale per 1/m, saturates at 1
};

struct FresnelConfig {
  bool enabled = true;
  double ripple = 0.02;
  double tail_length_um = 80.0;  // optical path of the tail interferometer
  double mod_gain = 1.0;         // log-amplitude change per rad of tail bend
  double phase_gain = 2.0;       // phase change per rad of tail bend
};

struct EffectsConfig {
  double mode_field_gain = 1500.0;  // c in A = a0 (1 - c r kappa cos(theta - phi))
  bool bragg_shift_on = true;
  double photoelastic = 0.22;       // p_e; the shift uses (1 - p_e)
  BendLossConfig bendloss;
  PdlConfig pdl;
  CladdingConfig cladding;
  FresnelConfig fresnel;
  double noise_sigma = 0.005;

  /// Cosine-law only: confounders and noise disabled, Bragg shift kept.
  static EffectsConfig confounders_off();
  void validate() const;
};

struct SpectrumScan {
  std::vector<double> intensities;  // kGridSize values, max 1
};

enum class ScenarioKind : std::uint8_t { kRandom = 0, kTrajectory = 1, kTemplate = 2 };

const char* scenario_name(ScenarioKind kind) noexcept;
ScenarioKind parse_scenario(const std::string& name);

struct SimSample {
  std::array<SpectrumScan, kScanCount> scans;
  MarkerShape shape;
  CurvatureProfile profile;
  std::array<PlaneReading, kPlaneCount> plane_truth;
  ScenarioKind scenario = ScenarioKind::kRandom;
  std::uint64_t seed = 0;
};

struct ShapeSamplerConfig {
  double kappa_min = 0.58;
  double kappa_max = 33.5;
  int n_modes = 6;
  double trajectory_correlation = 0.99;
  /// Trajectory steps per recording session; each session restarts the
  /// walk from a fresh stationary draw. 0 records one session.
  std::size_t trajectory_session = 0;
  // Shape of the smooth random fields (logit of the normalized curvature).
  double kappa_logit_mean = -2.0;
  double kappa_logit_spread = 2.0;
  double theta_spread = 1.5;

  void validate() const;
  std::size_t coefficient_count() const noexcept {
    return 2 * static_cast<std::size_t>(n_modes) + 2;
  }
};

/// Per-plane curvature and bend direction of a profile.
std::array<PlaneReading, kPlaneCount> plane_readings_of(const CurvatureProfile& profile,
                                                         const SensorLayout& layout);

/// Noise-free spectrum before peak normalization.
std::vector<double> raw_spectrum(const CurvatureProfile& profile, const SensorLayout& layout,
                                 const EffectsConfig& effects);

/// Noise-free, peak-normalized spectrum on the layout grid.
std::vector<double> clean_spectrum(const CurvatureProfile& profile, const SensorLayout& layout,
                                   const EffectsConfig& effects);

SpectrumScan simulate_scan(const CurvatureProfile& profile, const SensorLayout& layout,
                           const EffectsConfig& effects, Rng& rng);

SimSample simulate_sample(const CurvatureProfile& profile, const SensorLayout& layout,
                          const EffectsConfig& effects, Rng& rng);

/// Maps standard-normal coefficients onto a smooth profile with curvature
/// inside [kappa_min, kappa_max] and zero material twist.
CurvatureProfile profile_from_coefficients(const ShapeSamplerConfig& cfg,
                                           const std::vector<double>& z, double length);

std::vector<double> draw_coefficients(const ShapeSamplerConfig& cfg, Rng& rng);

CurvatureProfile sample_random_shape(const ShapeSamplerConfig& cfg, Rng& rng,
                                     double length = 0.30);

/// Smoothed AR(1) walk on the shape coefficients: an AR(1) drive with
/// retention rho feeds a second pole at rho, scaled so the stationary law
/// equals the random sampler's. Retention 0 gives independent draws.
class TrajectoryWalker {
 public:
  explicit TrajectoryWalker(const ShapeSamplerConfig& cfg);
  /// First call draws the initial state; later calls advance one step.
  const std::vector<double>& advance(Rng& rng);

 private:
  ShapeSamplerConfig cfg_;
  std::vector<double> drive_;
  std::vector<double> z_;
};

std::vector<CurvatureProfile> sample_trajectory(const ShapeSamplerConfig& cfg, std::size_t steps,
                                                Rng& rng, double length = 0.30);

inline constexpr double kTemplateRamp = 5e-3;

/// Constant bend 1/bend_radius on [a, b] with 5 mm cosine ramps inside the
/// segment, straight elsewhere. An infinite radius gives a straight fiber.
CurvatureProfile template_shape(double a, double b, double bend_radius, const SensorLayout& layout,
                                double theta = 0.0);

struct TemplateSegment {
  double a = 0;
  double b = 0;
};

/// Middle 30 mm between planes 2-3, 3-4, 4-5 and the 30 mm starting 10 mm
/// after the last plane.
std::vector<TemplateSegment> default_template_segments(const SensorLayout& layout);

inline constexpr std::size_t kTemplateRepetitions = 2;
inline constexpr std::size_t kTemplateMeasurements = 40;
inline constexpr double kTemplateBendRadius = 0.05;

/// One stored sample: 3x190 spectra and 20x3 shape as 32-bit floats plus
/// the ground-truth per-plane readings.
struct SampleRecord {
  std::uint64_t seed = 0;
  ScenarioKind scenario = ScenarioKind::kRandom;
  std::uint32_t group = 0;  // repeated-pose id for templates, index otherwise
  std::array<float, kFeatureSize> spectra{};
  std::array<float, kTargetSize> shape_mm{};
  std::array<float, 2 * kPlaneCount> plane_truth{};  // (kappa, theta) per plane
  float max_kappa = 0;

  bool operator==(const SampleRecord&) const = default;

  MarkerShape shape() const;
  std::array<PlaneReading, kPlaneCount> readings(const SensorLayout& layout) const;
  std::array<SpectrumScan, kScanCount> scans() const;
};

SampleRecord to_record(const SimSample& sample, std::uint32_t group);

struct DatasetHeader {
  std::uint32_t version = 1;
  SensorLayout layout;
  EffectsConfig effects;
  ShapeSamplerConfig sampler;
  std::uint64_t seed = 0;
  ScenarioKind kind = ScenarioKind::kRandom;
};

struct Dataset {
  DatasetHeader header;
  std::vector<SampleRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  /// Copy with the selected records, header kept.
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Deterministic for (kind, count, configs, seed) regardless of `threads`.
/// The template kind always emits 4 segments x 2 repetitions x 40 samples.
Dataset generate_dataset(ScenarioKind kind, std::size_t count, const SensorLayout& layout,
                         const EffectsConfig& effects, const ShapeSamplerConfig& cfg,
                         std::uint64_t seed, unsigned threads = 1);

/// Thread count from EFBG_THREADS (default 1).
unsigned configured_threads();

}  // namespace efbg
