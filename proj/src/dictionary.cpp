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

#include "efbg/dictionary.hpp"

#include <cmath>
#include <limits>

#include "efbg/error.hpp"

namespace efbg {

namespace {

double squared_norm(std::span<const float> x) {
  double s = 0;
  for (float v : x) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

}  // namespace

SpectrumDictionary SpectrumDictionary::build(std::span<const SampleRecord> samples) {
  require(!samples.empty(), Errc::kInvalidInput, "dictionary needs at least one sample");
  SpectrumDictionary d;
  d.features_.reserve(samples.size() * kFeatureSize);
  d.shapes_.reserve(samples.size());
  d.norms_.reserve(samples.size());
  for (const auto& r : samples) {
    d.features_.insert(d.features_.end(), r.spectra.begin(), r.spectra.end());
    d.shapes_.push_back(r.shape_mm);
    d.norms_.push_back(std::sqrt(squared_norm(r.spectra)));
  }
  return d;
}

SpectrumDictionary SpectrumDictionary::build(std::span<const Dataset* const> datasets) {
  std::vector<SampleRecord> all;
  for (const Dataset* ds : datasets) all.insert(all.end(), ds->records.begin(), ds->records.end());
  return build(all);
}

MarkerShape SpectrumDictionary::shape_at(std::size_t i) const {
  MarkerShape m;
  for (std::size_t k = 0; k < kMarkerCount; ++k) {
    m.coords.emplace_back(shapes_[i][3 * k], shapes_[i][3 * k + 1], shapes_[i][3 * k + 2]);
  }
  return m;
}

DictionaryMatch SpectrumDictionary::query(std::span<const float> q) const {
  require(!shapes_.empty(), Errc::kInvalidInput, "dictionary is empty");
  require(q.size() == kFeatureSize, Errc::kInvalidInput, "query must have 570 features");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const float* x = features_.data() + i * kFeatureSize;
    double d2 = 0;
    for (std::size_t j = 0; j < kFeatureSize; ++j) {
      const double d = static_cast<double>(q[j]) - static_cast<double>(x[j]);
      d2 += d * d;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2), shape_at(best)};
}

DictionaryMatch SpectrumDictionary::query_indexed(std::span<const float> q) const {
  require(!shapes_.empty(), Errc::kInvalidInput, "dictionary is empty");
  require(q.size() == kFeatureSize, Errc::kInvalidInput, "query must have 570 features");
  const double qn = std::sqrt(squared_norm(q));
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    // Reverse triangle inequality; the slack keeps rounding from pruning a tie.
    const double gap = qn - norms_[i];
    if (gap * gap > best_d2 * (1.0 + 1e-9) + 1e-12) continue;
    const float* x = features_.data() + i * kFeatureSize;
    double d2 = 0;
    std::size_t j = 0;
    for (; j < kFeatureSize; ++j) {
      const double d = static_cast<double>(q[j]) - static_cast<double>(x[j]);
      d2 += d * d;
      if ((j & 31) == 31 && d2 > best_d2) break;
    }
    if (j == kFeatureSize && d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2), shape_at(best)};
}

}  // namespace efbg
