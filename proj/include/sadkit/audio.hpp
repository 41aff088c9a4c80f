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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sadkit/matrix.hpp"

namespace sadkit {

// Mono signal with amplitudes in [-1, 1] (mixing may push samples past
// the rails; nothing here clips).
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 8000;
  std::string id;
};

enum class Window { kRectangular, kHamming };

struct FramingSpec {
  double frame_len_ms = 20.0;
  double hop_ms = 10.0;
  Window window = Window::kRectangular;

  std::size_t frame_samples(int sample_rate) const;
  std::size_t hop_samples(int sample_rate) const;
  // Throws kInvalidArgument when these lengths cannot produce frames at this rate.
  void validate(int sample_rate) const;
};

// One row per frame, window already applied.
struct FrameSequence {
  RowMatrix frames;
  FramingSpec spec;
  int sample_rate = 8000;
  std::string source_id;

  std::size_t size() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t frame_len() const {
    return static_cast<std::size_t>(frames.cols());
  }
};

struct FrameEnergies {
  std::vector<double> linear;
  std::vector<double> db;
};

inline constexpr double kEnergyFloor = 1e-12;

// 16-bit PCM mono only. Distinct error codes for a broken header, a channel
// count other than one, and a sample width other than 16 bits.
Waveform read_wav(const std::filesystem::path& path);

// Writes 16-bit PCM. Samples outside [-1, 1) saturate; a warning is logged
// when that happens.
void write_wav(const std::filesystem::path& path, const Waveform& w);

std::size_t frame_count(std::size_t num_samples, std::size_t frame_len,
                        std::size_t hop);

std::vector<double> window_coefficients(Window window, std::size_t length);

FrameSequence frame_signal(const Waveform& w, const FramingSpec& spec);

FrameEnergies frame_energy(const FrameSequence& frames);

// Fraction of adjacent-sample sign changes; zero counts as positive.
std::vector<double> zero_crossing_rate(const FrameSequence& frames);

// Mean over frames of |DFT| (nfft points, zero padded), nfft/2 + 1 bins.
std::vector<double> avg_magnitude_spectrum(const Waveform& w,
                                           const FramingSpec& spec,
                                           std::size_t nfft);

// Power spectrum |X_k|^2, k = 0..nfft/2, of one zero-padded frame.
std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t nfft);

double mean_square(std::span<const double> x);

}  // namespace sadkit
