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

#include "efbg/error.hpp"

namespace efbg {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidInput: return "invalid-input";
    case Errc::kConfig: return "config";
    case Errc::kIo: return "io";
    case Errc::kDiverged: return "training-diverged";
    case Errc::kOutOfRange: return "out-of-range";
    case Errc::kState: return "state";
    case Errc::kInsufficientExcitation: return "insufficient-excitation";
    case Errc::kCalibrationDegenerate: return "calibration-degenerate";
    case Errc::kBatchTooSmall: return "batch-too-small";
    case Errc::kSearchFailed: return "search-failed";
  }
  return "unknown";
}

}  // namespace efbg
