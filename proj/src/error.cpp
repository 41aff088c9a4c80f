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


#include "sadkit/error.hpp"

namespace sadkit {

ErrorClass error_class(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument:
    case Errc::kSampleRateMismatch:
    case Errc::kTooShort:
    case Errc::kNoiseTooShort:
    case Errc::kLengthMismatch:
    case Errc::kDimensionMismatch:
      return ErrorClass::kUsage;
    case Errc::kWavMalformed:
    case Errc::kWavChannels:
    case Errc::kWavBitDepth:
    case Errc::kFormat:
      return ErrorClass::kFormat;
    case Errc::kZeroPower:
    case Errc::kDegenerate:
    case Errc::kNumerical:
      return ErrorClass::kNumerical;
    case Errc::kIo:
      return ErrorClass::kIo;
    case Errc::kNotFound:
      return ErrorClass::kNotFound;
    case Errc::kStaleArtifact:
      return ErrorClass::kStale;
  }
  return ErrorClass::kUsage;
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kWavMalformed: return "wav-malformed";
    case Errc::kWavChannels: return "wav-channels";
    case Errc::kWavBitDepth: return "wav-bit-depth";
    case Errc::kSampleRateMismatch: return "sample-rate-mismatch";
    case Errc::kTooShort: return "too-short";
    case Errc::kNoiseTooShort: return "noise-too-short";
    case Errc::kZeroPower: return "zero-power";
    case Errc::kLengthMismatch: return "length-mismatch";
    case Errc::kDimensionMismatch: return "dimension-mismatch";
    case Errc::kDegenerate: return "degenerate";
    case Errc::kNumerical: return "numerical";
    case Errc::kFormat: return "format";
    case Errc::kIo: return "io";
    case Errc::kNotFound: return "not-found";
    case Errc::kStaleArtifact: return "stale-artifact";
  }
  return "unknown";
}

}  // namespace sadkit
