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

#include <stdexcept>
#include <string>

namespace efbg {

/// Failure categories raised by the library. The numeric values are shared
/// with the C API status codes and, for config/io/diverged, with CLI exit codes.
enum class Errc : int {
  kInvalidInput = 1,
  kConfig = 2,
  kIo = 3,
  kDiverged = 4,
  kOutOfRange = 5,
  kState = 6,
  kInsufficientExcitation = 7,
  kCalibrationDegenerate = 8,
  kBatchTooSmall = 9,
  kSearchFailed = 10,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace efbg
