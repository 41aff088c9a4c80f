// Copyright 2026 The sadkit Authors
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

namespace sadkit {

// Every failure the library reports carries one of these codes. Codes are
// grouped into coarse classes (see error_class) which the CLI maps onto
// process exit codes.
enum class Errc {
  kInvalidArgument,
  kWavMalformed,
  kWavChannels,
  kWavBitDepth,
  kSampleRateMismatch,
  kTooShort,
  kNoiseTooShort,
  kZeroPower,
  kLengthMismatch,
  kDimensionMismatch,
  kDegenerate,
  kNumerical,
  kFormat,
  kIo,
  kNotFound,
  kStaleArtifact,
};

enum class ErrorClass {
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kNumerical = 5,
  kStale = 6,
  kNotFound = 7,
};

ErrorClass error_class(Errc code);
const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace sadkit
