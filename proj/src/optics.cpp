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

#include "efbg/optics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "efbg/error.hpp"
#include "parallel.hpp"

namespace efbg {

using detail::parallel_for;

namespace {

constexpr double kFourLn2 = 2.772588722239781;  // 4 ln 2, FWHM -> Gaussian exponent
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

Rng noise_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix_seed(mix_seed(seed ^ index) ^ kNoiseStream));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Cumulative integrals of kappa^2, kappa cos(theta) and kappa sin(theta).
class ProfileIntegrals {
 public:
  ProfileIntegrals(const CurvatureProfile& profile, double ds = 5e-4) : ds_(ds) {
    const auto n = static_cast<std::size_t>(std::ceil(profile.length() / ds - 1e-9)) + 1;
    k2_.assign(n, 0.0);
    kc_.assign(n, 0.0);
    ks_.assign(n, 0.0);
    s_.resize(n);
    double pk2 = 0, pkc = 0, pks = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s_[i] = std::min(profile.length(), static_cast<double>(i) * ds);
      const auto p = profile.at(s_[i]);
      const double k2 = p.kappa * p.kappa;
      const double kc = p.kappa * std::cos(p.theta);
      const double ks = p.kappa * std::sin(p.theta);
      if (i > 0) {
        const double h = s_[i] - s_[i - 1];
        k2_[i] = k2_[i - 1] + 0.5 * h * (pk2 + k2);
        kc_[i] = kc_[i - 1] + 0.5 * h * (pkc + kc);
        ks_[i] = ks_[i - 1] + 0.5 * h * (pks + ks);
      }
      pk2 = k2;
      pkc = kc;
      pks = ks;
    }
  }

  double kappa2(double s) const { return lookup(k2_, s); }
  double kappa_cos(double s) const { return lookup(kc_, s); }
  double kappa_sin(double s) const { return lookup(ks_, s); }

 private:
  double lookup(const std::vector<double>& c, double s) const {
    const double u = std::clamp(s / ds_, 0.0, static_cast<double>(c.size() - 1));
    auto i = static_cast<std::size_t>(std::floor(u));
    if (i + 1 >= c.size()) return c.back();
    const double t = u - static_cast<double>(i);
    return (1 - t) * c[i] + t * c[i + 1];
  }

  double ds_;
  std::vector<double> s_, k2_, kc_, ks_;
};

}  // namespace

std::vector<double> raw_spectrum(const CurvatureProfile& profile, const SensorLayout& layout,
                                 const EffectsConfig& fx) {
  require(profile.length() >= layout.length - 1e-12, Errc::kInvalidInput,
          "profile is shorter than the sensor layout");
  const ProfileIntegrals integ(profile);
  const auto planes = plane_readings_of(profile, layout);
  const auto& grid = layout.grid;
  std::vector<double> spec(grid.size(), 0.0);

  for (const auto& fbg : layout.fbgs) {
    const auto& pr = planes[static_cast<std::size_t>(fbg.plane_index)];
    const double r = fbg.r_offset_um * 1e-6;
    const double proj = std::cos(pr.theta - fbg.phi);
    const double amp =
        std::clamp(fbg.base_amplitude * (1.0 - fx.mode_field_gain * r * pr.kappa * proj), 0.05, 1.0);
    double center = fbg.lambda_bragg_nm;
    if (fx.bragg_shift_on) center *= 1.0 - (1.0 - fx.photoelastic) * pr.kappa * r * proj;
    const double w2 = fbg.peak_fwhm_nm * fbg.peak_fwhm_nm;

    double dip = 0;
    if (fx.cladding.enabled) dip = fx.cladding.depth * std::min(1.0, fx.cladding.curvature_gain * pr.kappa);
    const double dip_center = center - fx.cladding.offset_nm;
    const double dip_w2 = fx.cladding.width_nm * fx.cladding.width_nm;

    double loss = 0, phase_s = 0, phase_l = 0;
    if (fx.bendloss.enabled) {
      loss = fx.bendloss.base * integ.kappa2(pr.s);
      const double directional =
          std::cos(fbg.phi) * integ.kappa_cos(pr.s) + std::sin(fbg.phi) * integ.kappa_sin(pr.s);
      phase_s = fx.bendloss.short_phase_gain * directional;
      phase_l = fx.bendloss.long_phase_gain * directional;
    }

    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double lam = grid[j];
      const double d = lam - center;
      double g = std::exp(-kFourLn2 * d * d / w2);
      if (g < 1e-300) continue;
      if (dip > 0) {
        const double dd = lam - dip_center;
        g *= 1.0 - dip * std::exp(-kFourLn2 * dd * dd / dip_w2);
      }
      double t2 = 1.0;
      if (loss > 0) {
        const double mod = 1.0 +
                           fx.bendloss.short_depth *
                               std::sin(2 * kPi * lam / fx.bendloss.short_period_nm + phase_s) +
                           fx.bendloss.long_depth *
                               std::sin(2 * kPi * lam / fx.bendloss.long_period_nm + phase_l);
        t2 = std::exp(-loss * mod);
      }
      spec[j] += amp * g * t2;
    }
  }

  if (fx.fresnel.enabled) {
    const double s0 = layout.last_plane();
    const double ku = integ.kappa_cos(profile.length()) - integ.kappa_cos(s0);
    const double kv = integ.kappa_sin(profile.length()) - integ.kappa_sin(s0);
    const double scale = fx.fresnel.ripple * std::exp(fx.fresnel.mod_gain * kv);
    const double opl = fx.fresnel.tail_length_um * 1e3;  // nm
    const double phase = fx.fresnel.phase_gain * ku;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      spec[j] += scale * (1.0 + std::cos(4 * kPi * opl / grid[j] + phase));
    }
  }

  if (fx.pdl.enabled) {
    const double phase = fx.pdl.birefringence_gain * integ.kappa2(layout.last_plane());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      spec[j] *= 1.0 + fx.pdl.depth * std::sin(2 * kPi * grid[j] / fx.pdl.period_nm + phase);
    }
  }
  return spec;
}

namespace {

void normalize_peak(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m > 0) {
    for (auto& x : v) x /= m;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void SensorLayout::validate() const {
  require(length > 0, Errc::kInvalidInput, "layout length must be positive");
  require(fbgs.size() == kFbgCount, Errc::kInvalidInput, "layout needs exactly 15 FBGs");
  require(grid.size() == kGridSize, Errc::kInvalidInput, "layout grid needs 190 wavelengths");
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    require(plane_positions[p] > 0 && plane_positions[p] < length, Errc::kInvalidInput,
            "plane position outside the sensor");
    if (p > 0) {
      require(plane_positions[p] > plane_positions[p - 1], Errc::kInvalidInput,
              "plane positions must increase");
    }
  }
  for (std::size_t j = 1; j < grid.size(); ++j) {
    require(grid[j] > grid[j - 1], Errc::kInvalidInput, "grid must increase");
  }
  for (std::size_t i = 0; i < fbgs.size(); ++i) {
    const auto& f = fbgs[i];
    require(f.plane_index == static_cast<int>(i / kFbgsPerPlane), Errc::kInvalidInput,
            "FBGs must be listed plane-major");
    require(f.lambda_bragg_nm >= 813 && f.lambda_bragg_nm <= 869, Errc::kInvalidInput,
            "Bragg wavelength outside [813, 869] nm");
    require(f.lambda_bragg_nm > grid.front() && f.lambda_bragg_nm < grid.back(),
            Errc::kInvalidInput, "Bragg wavelength outside the grid");
    require(f.r_offset_um > 0 && f.peak_fwhm_nm > 0, Errc::kInvalidInput,
            "FBG offset and width must be positive");
    require(f.base_amplitude > 0 && f.base_amplitude <= 1, Errc::kInvalidInput,
            "base amplitude must be in (0, 1]");
    for (std::size_t k = 0; k < i; ++k) {
      require(fbgs[k].lambda_bragg_nm != f.lambda_bragg_nm, Errc::kInvalidInput,
              "Bragg wavelengths must be distinct");
    }
  }
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    // Three gratings per plane, pairwise 90 or 180 degrees apart.
    for (std::size_t a = 0; a < kFbgsPerPlane; ++a) {
      for (std::size_t b = a + 1; b < kFbgsPerPlane; ++b) {
        const double d = std::abs(wrap_angle(fbgs[p * 3 + a].phi - fbgs[p * 3 + b].phi));
        const bool quarter = std::abs(d - kPi / 2) < 1e-9;
        const bool half = std::abs(d - kPi) < 1e-9;
        require(quarter || half, Errc::kInvalidInput, "plane FBGs must be 90 degrees apart");
      }
    }
  }
}

SensorLayout default_layout() {
  SensorLayout l;
  l.length = 0.30;
  l.plane_positions = {0.05, 0.10, 0.15, 0.20, 0.25};
  const std::array<double, 3> phis = {kPi / 2, kPi, 0.0};
  for (std::size_t k = 0; k < kFbgCount; ++k) {
    FbgDescriptor f;
    f.plane_index = static_cast<int>(k / kFbgsPerPlane);
    f.lambda_bragg_nm = 813.0 + 4.0 * static_cast<double>(k);
    f.phi = phis[k % kFbgsPerPlane];
    l.fbgs.push_back(f);
  }
  l.grid.resize(kGridSize);
  for (std::size_t j = 0; j < kGridSize; ++j) {
    l.grid[j] = 800.0 + 90.0 * static_cast<double>(j) / static_cast<double>(kGridSize - 1);
  }
  return l;
}

EffectsConfig EffectsConfig::confounders_off() {
  EffectsConfig e;
  e.bendloss.enabled = false;
  e.pdl.enabled = false;
  e.cladding.enabled = false;
  e.fresnel.enabled = false;
  e.noise_sigma = 0.0;
  return e;
}

void EffectsConfig::validate() const {
  auto depth_ok = [](double d) { return d >= 0 && d < 1; };
  require(std::isfinite(mode_field_gain) && mode_field_gain >= 0, Errc::kInvalidInput,
          "mode_field_gain must be non-negative");
  require(photoelastic >= 0 && photoelastic < 1, Errc::kInvalidInput, "photoelastic in [0,1)");
  require(depth_ok(bendloss.short_depth) && depth_ok(bendloss.long_depth) && depth_ok(pdl.depth) &&
              depth_ok(cladding.depth),
          Errc::kInvalidInput, "effect depths must lie in [0, 1)");
  require(bendloss.base >= 0, Errc::kInvalidInput, "bend-loss coefficient must be non-negative");
  require(bendloss.short_period_nm > 0 && bendloss.short_period_nm < bendloss.long_period_nm,
          Errc::kInvalidInput, "bend-loss periods must satisfy 0 < short < long");
  require(pdl.period_nm > 0, Errc::kInvalidInput, "pdl period must be positive");
  require(cladding.width_nm > 0, Errc::kInvalidInput, "cladding dip width must be positive");
  require(fresnel.ripple >= 0 && fresnel.tail_length_um > 0, Errc::kInvalidInput,
          "fresnel ripple and tail length must be positive");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0, Errc::kInvalidInput,
          "noise_sigma must be non-negative");
}

const char* scenario_name(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::kRandom: return "random";
    case ScenarioKind::kTrajectory: return "trajectory";
    case ScenarioKind::kTemplate: return "template";
  }
  return "unknown";
}

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "random") return ScenarioKind::kRandom;
  if (name == "trajectory") return ScenarioKind::kTrajectory;
  if (name == "template") return ScenarioKind::kTemplate;
  fail(Errc::kInvalidInput, "unknown scenario kind '" + name + "'");
}

void ShapeSamplerConfig::validate() const {
  require(kappa_min > 0 && kappa_min < kappa_max, Errc::kInvalidInput,
          "kappa range must be positive with min < max");
  require(n_modes >= 1, Errc::kInvalidInput, "n_modes must be at least 1");
  require(trajectory_correlation >= 0 && trajectory_correlation < 1, Errc::kInvalidInput,
          "trajectory_correlation must lie in [0, 1)");
  require(kappa_logit_spread >= 0 && theta_spread >= 0, Errc::kInvalidInput,
          "spreads must be non-negative");
}

// ---------------------------------------------------------------------------

std::array<PlaneReading, kPlaneCount> plane_readings_of(const CurvatureProfile& profile,
                                                         const SensorLayout& layout) {
  std::array<PlaneReading, kPlaneCount> out;
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    const auto v = profile.at(layout.plane_positions[p]);
    out[p] = {layout.plane_positions[p], v.kappa, v.kappa < kKappaStraightEps ? 0.0 : v.theta};
  }
  return out;
}

std::vector<double> clean_spectrum(const CurvatureProfile& profile, const SensorLayout& layout,
                                   const EffectsConfig& effects) {
  auto s = raw_spectrum(profile, layout, effects);
  normalize_peak(s);
  return s;
}

namespace {

SpectrumScan noisy_scan(const std::vector<double>& clean, double sigma, Rng& rng) {
  SpectrumScan scan{clean};
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& v : scan.intensities) v = std::max(0.0, v + noise(rng));
    normalize_peak(scan.intensities);
  }
  return scan;
}

}  // namespace

SpectrumScan simulate_scan(const CurvatureProfile& profile, const SensorLayout& layout,
                           const EffectsConfig& effects, Rng& rng) {
  return noisy_scan(clean_spectrum(profile, layout, effects), effects.noise_sigma, rng);
}

SimSample simulate_sample(const CurvatureProfile& profile, const SensorLayout& layout,
                          const EffectsConfig& effects, Rng& rng) {
  const auto clean = clean_spectrum(profile, layout, effects);
  std::array<SpectrumScan, kScanCount> scans;
  for (auto& s : scans) s = noisy_scan(clean, effects.noise_sigma, rng);
  auto shape = markers_from_curve(integrate_frenet(profile, kShapeStep), kMarkerCount);
  return SimSample{std::move(scans), std::move(shape), profile, plane_readings_of(profile, layout),
                   ScenarioKind::kRandom, 0};
}

// ---------------------------------------------------------------------------
// Shape generators

std::vector<double> draw_coefficients(const ShapeSamplerConfig& cfg, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> z(cfg.coefficient_count());
  for (auto& v : z) v = n01(rng);
  return z;
}

CurvatureProfile profile_from_coefficients(const ShapeSamplerConfig& cfg,
                                           const std::vector<double>& z, double length) {
  cfg.validate();
  const auto modes = static_cast<std::size_t>(cfg.n_modes);
  require(z.size() == cfg.coefficient_count(), Errc::kInvalidInput, "coefficient count mismatch");
  const double spacing = length / static_cast<double>(modes);
  const double width = 0.6 * spacing;
  const double theta0 = std::atan2(z[2 * modes + 1], z[2 * modes]);

  const auto n = static_cast<std::size_t>(std::llround(length / 1e-3)) + 1;
  std::vector<ProfileSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::min(length, static_cast<double>(i) * 1e-3);
    double fk = 0, ft = 0;
    for (std::size_t k = 0; k < modes; ++k) {
      const double c = (static_cast<double>(k) + 0.5) * spacing;
      const double b = std::exp(-0.5 * (s - c) * (s - c) / (width * width));
      fk += z[k] * b;
      ft += z[modes + k] * b;
    }
    const double kappa =
        cfg.kappa_min + (cfg.kappa_max - cfg.kappa_min) *
                            logistic(cfg.kappa_logit_mean + cfg.kappa_logit_spread * fk);
    samples[i] = {s, kappa, wrap_angle(theta0 + cfg.theta_spread * ft), 0.0};
  }
  return CurvatureProfile(std::move(samples), length, Interpolation::kLinear);
}

CurvatureProfile sample_random_shape(const ShapeSamplerConfig& cfg, Rng& rng, double length) {
  return profile_from_coefficients(cfg, draw_coefficients(cfg, rng), length);
}

TrajectoryWalker::TrajectoryWalker(const ShapeSamplerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

const std::vector<double>& TrajectoryWalker::advance(Rng& rng) {
  auto eps = draw_coefficients(cfg_, rng);
  if (z_.empty()) {
    // Start in the joint stationary law; corr(z, drive) = 1 / sqrt(1 + rho^2).
    const double rho = cfg_.trajectory_correlation;
    drive_ = std::move(eps);
    z_ = drive_;
    if (rho > 0) {
      const double a = 1.0 / std::sqrt(1.0 + rho * rho);
      const auto fresh = draw_coefficients(cfg_, rng);
      for (std::size_t k = 0; k < z_.size(); ++k) {
        z_[k] = a * drive_[k] + std::sqrt(1.0 - a * a) * fresh[k];
      }
    }
    return z_;
  }
  const double rho = cfg_.trajectory_correlation;
  const double innov = std::sqrt(1.0 - rho * rho);
  const double gain = (1.0 - rho * rho) / std::sqrt(1.0 + rho * rho);
  for (std::size_t k = 0; k < z_.size(); ++k) {
    drive_[k] = rho * drive_[k] + innov * eps[k];
    z_[k] = rho * z_[k] + gain * drive_[k];
  }
  return z_;
}

std::vector<CurvatureProfile> sample_trajectory(const ShapeSamplerConfig& cfg, std::size_t steps,
                                                Rng& rng, double length) {
  require(steps >= 1, Errc::kInvalidInput, "trajectory needs at least one step");
  TrajectoryWalker walker(cfg);
  std::vector<CurvatureProfile> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    out.push_back(profile_from_coefficients(cfg, walker.advance(rng), length));
  }
  return out;
}

CurvatureProfile template_shape(double a, double b, double bend_radius, const SensorLayout& layout,
                                double theta) {
  const double len = layout.length;
  require(a >= 0 && a < b && b <= len, Errc::kInvalidInput, "template segment outside the sensor");
  require(b - a >= kTemplateRamp, Errc::kInvalidInput, "template segment shorter than its ramp");
  require(bend_radius > 0, Errc::kInvalidInput, "bend radius must be positive");
  const double k0 = std::isfinite(bend_radius) ? 1.0 / bend_radius : 0.0;
  const double th = k0 > 0 ? wrap_angle(theta) : 0.0;

  std::vector<double> knots;
  const double ds = 2.5e-4;
  for (double s = 0; s < len; s += ds) knots.push_back(s);
  knots.push_back(len);
  knots.push_back(a);
  knots.push_back(b);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-12; }),
              knots.end());

  std::vector<ProfileSample> samples;
  samples.reserve(knots.size());
  for (double s : knots) {
    double k = 0;
    if (s > a && s < b) {
      const double v = std::min({1.0, (s - a) / kTemplateRamp, (b - s) / kTemplateRamp});
      k = k0 * 0.5 * (1.0 - std::cos(kPi * v));
    }
    samples.push_back({s, k, th, 0.0});
  }
  samples.front().s = 0.0;
  return CurvatureProfile(std::move(samples), len, Interpolation::kLinear);
}

std::vector<TemplateSegment> default_template_segments(const SensorLayout& layout) {
  std::vector<TemplateSegment> out;
  const auto& p = layout.plane_positions;
  for (std::size_t k = 1; k + 1 < kPlaneCount; ++k) {
    const double mid = 0.5 * (p[k] + p[k + 1]);
    out.push_back({mid - 0.015, mid + 0.015});
  }
  out.push_back({p.back() + 0.010, std::min(layout.length, p.back() + 0.040)});
  return out;
}

// ---------------------------------------------------------------------------
// Records and datasets

MarkerShape SampleRecord::shape() const {
  MarkerShape m;
  m.coords.reserve(kMarkerCount);
  for (std::size_t k = 0; k < kMarkerCount; ++k) {
    m.coords.emplace_back(shape_mm[3 * k], shape_mm[3 * k + 1], shape_mm[3 * k + 2]);
  }
  return m;
}

std::array<PlaneReading, kPlaneCount> SampleRecord::readings(const SensorLayout& layout) const {
  std::array<PlaneReading, kPlaneCount> out;
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    out[p] = {layout.plane_positions[p], plane_truth[2 * p], plane_truth[2 * p + 1]};
  }
  return out;
}

std::array<SpectrumScan, kScanCount> SampleRecord::scans() const {
  std::array<SpectrumScan, kScanCount> out;
  for (std::size_t c = 0; c < kScanCount; ++c) {
    out[c].intensities.assign(spectra.begin() + static_cast<std::ptrdiff_t>(c * kGridSize),
                              spectra.begin() + static_cast<std::ptrdiff_t>((c + 1) * kGridSize));
  }
  return out;
}

SampleRecord to_record(const SimSample& sample, std::uint32_t group) {
  SampleRecord r;
  r.seed = sample.seed;
  r.scenario = sample.scenario;
  r.group = group;
  for (std::size_t c = 0; c < kScanCount; ++c) {
    const auto& v = sample.scans[c].intensities;
    require(v.size() == kGridSize, Errc::kInvalidInput, "scan must have 190 elements");
    for (std::size_t j = 0; j < kGridSize; ++j) r.spectra[c * kGridSize + j] = static_cast<float>(v[j]);
  }
  require(sample.shape.size() == kMarkerCount, Errc::kInvalidInput, "shape must have 20 markers");
  for (std::size_t k = 0; k < kMarkerCount; ++k) {
    for (int d = 0; d < 3; ++d) r.shape_mm[3 * k + static_cast<std::size_t>(d)] = static_cast<float>(sample.shape.coords[k][d]);
  }
  for (std::size_t p = 0; p < kPlaneCount; ++p) {
    r.plane_truth[2 * p] = static_cast<float>(sample.plane_truth[p].kappa);
    r.plane_truth[2 * p + 1] = static_cast<float>(sample.plane_truth[p].theta);
  }
  r.max_kappa = static_cast<float>(sample.profile.max_kappa());
  return r;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.header = header;
  out.records.reserve(indices.size());
  for (auto i : indices) out.records.push_back(records.at(i));
  return out;
}

unsigned configured_threads() {
  const char* env = std::getenv("EFBG_THREADS");
  if (env == nullptr) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v >= 1 ? static_cast<unsigned>(v) : 1u;
}

Dataset generate_dataset(ScenarioKind kind, std::size_t count, const SensorLayout& layout,
                         const EffectsConfig& effects, const ShapeSamplerConfig& cfg,
                         std::uint64_t seed, unsigned threads) {
  layout.validate();
  effects.validate();
  cfg.validate();
  Dataset ds;
  ds.header.layout = layout;
  ds.header.effects = effects;
  ds.header.sampler = cfg;
  ds.header.seed = seed;
  ds.header.kind = kind;

  auto finish = [&](std::size_t i, const CurvatureProfile& profile, std::uint32_t group) {
    Rng nrng = noise_rng(seed, i);
    SimSample s = simulate_sample(profile, layout, effects, nrng);
    s.scenario = kind;
    s.seed = seed ^ i;
    ds.records[i] = to_record(s, group);
  };

  switch (kind) {
    case ScenarioKind::kRandom: {
      require(count >= 1, Errc::kInvalidInput, "dataset count must be at least 1");
      ds.records.resize(count);
      parallel_for(count, threads, [&](std::size_t i) {
        Rng rng = derived_rng(seed, i);
        finish(i, sample_random_shape(cfg, rng, layout.length), static_cast<std::uint32_t>(i));
      });
      break;
    }
    case ScenarioKind::kTrajectory: {
      require(count >= 1, Errc::kInvalidInput, "dataset count must be at least 1");
      ds.records.resize(count);
      TrajectoryWalker walker(cfg);
      std::vector<std::vector<double>> coeffs(count);
      for (std::size_t i = 0; i < count; ++i) {
        if (i > 0 && cfg.trajectory_session > 0 && i % cfg.trajectory_session == 0) walker = TrajectoryWalker(cfg);
        Rng rng = derived_rng(seed, i);
        coeffs[i] = walker.advance(rng);
      }
      parallel_for(count, threads, [&](std::size_t i) {
        finish(i, profile_from_coefficients(cfg, coeffs[i], layout.length),
               static_cast<std::uint32_t>(i));
      });
      break;
    }
    case ScenarioKind::kTemplate: {
      const auto segments = default_template_segments(layout);
      const std::size_t groups = segments.size() * kTemplateRepetitions;
      ds.records.resize(groups * kTemplateMeasurements);
      std::vector<CurvatureProfile> profiles;
      for (std::size_t g = 0; g < groups; ++g) {
        Rng rng = derived_rng(seed, g * kTemplateMeasurements);
        std::uniform_real_distribution<double> angle(-kPi, kPi);
        const auto& seg = segments[g / kTemplateRepetitions];
        profiles.push_back(template_shape(seg.a, seg.b, kTemplateBendRadius, layout, angle(rng)));
      }
      parallel_for(ds.records.size(), threads, [&](std::size_t i) {
        const std::size_t g = i / kTemplateMeasurements;
        finish(i, profiles[g], static_cast<std::uint32_t>(g));
      });
      break;
    }
  }
  return ds;
}

}  // namespace efbg
