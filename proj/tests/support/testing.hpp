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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sadkit/audio.hpp"

namespace sadkit::testing {

// Directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<double> gaussian_noise(std::size_t n, double sigma, std::uint64_t seed);
Waveform make_wave(std::vector<double> samples, std::string id = "w", int rate = 8000);

// Hand-built RIFF file for exercising the reader's error paths.
void write_raw_wav(const std::filesystem::path& path, int channels, int bits, int rate,
                   const std::vector<std::int16_t>& samples);

std::string slurp(const std::filesystem::path& path);

}  // namespace sadkit::testing
