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


// Little-endian primitives shared by the WAV, feature and model formats.

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "sadkit/error.hpp"

namespace sadkit::detail {

template <typename UInt>
void put_le(std::ostream& os, UInt v) {
  char buf[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  }
  os.write(buf, sizeof(UInt));
}

template <typename UInt>
UInt get_le(std::istream& is, const char* what) {
  unsigned char buf[sizeof(UInt)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(UInt))) {
    throw Error(Errc::kFormat, std::string("truncated input reading ") + what);
  }
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(buf[i]) << (8 * i);
  }
  return v;
}

inline void put_f64(std::ostream& os, double v) {
  put_le(os, std::bit_cast<std::uint64_t>(v));
}
inline double get_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is, what));
}
inline void put_f32(std::ostream& os, float v) {
  put_le(os, std::bit_cast<std::uint32_t>(v));
}
inline float get_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(get_le<std::uint32_t>(is, what));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_le(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, const char* what) {
  auto n = get_le<std::uint32_t>(is, what);
  if (n > (1u << 20)) {
    throw Error(Errc::kFormat, std::string("implausible string length in ") + what);
  }
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) {
    throw Error(Errc::kFormat, std::string("truncated input reading ") + what);
  }
  return s;
}

}  // namespace sadkit::detail
