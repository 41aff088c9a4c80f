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

#include <cstdint>
#include <string>
#include <string_view>

namespace sadkit {

// 64-bit FNV-1a. Stable across platforms and standard libraries, unlike
// std::hash, so it is safe to persist.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h);

// Inverse of hash_hex; throws kFormat on anything but 16 hex digits.
std::uint64_t parse_hash_hex(std::string_view s);

// Seed for a per-item random stream that does not depend on processing
// order: mixes the run seed with the item's identifier.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view item_id);

}  // namespace sadkit
