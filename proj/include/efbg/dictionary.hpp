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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "efbg/optics.hpp"

namespace efbg {

struct DictionaryMatch {
  std::size_t index = 0;
  double distance = 0;
  MarkerShape shape;
};

/// Nearest-spectrum lookup over stored (570-element feature, shape) pairs.
class SpectrumDictionary {
 public:
  /// Entries keep insertion order; duplicates are retained.
  static SpectrumDictionary build(std::span<const SampleRecord> samples);
  static SpectrumDictionary build(std::span<const Dataset* const> datasets);

  std::size_t size() const noexcept { return shapes_.size(); }

  /// Exhaustive L2 scan; ties resolve to the lowest index.
  DictionaryMatch query(std::span<const float> features) const;

  /// Same result as query(), pruning with a norm bound and early abandoning.
  DictionaryMatch query_indexed(std::span<const float> features) const;

  std::span<const float> features(std::size_t i) const {
    return {features_.data() + i * kFeatureSize, kFeatureSize};
  }
  std::span<const float> shape_mm(std::size_t i) const {
    return {shapes_[i].data(), kTargetSize};
  }
  /// Per-entry feature norms (the index sidecar payload).
  const std::vector<double>& norms() const noexcept { return norms_; }

 private:
  MarkerShape shape_at(std::size_t i) const;

  std::vector<float> features_;
  std::vector<std::array<float, kTargetSize>> shapes_;
  std::vector<double> norms_;
};

}  // namespace efbg
