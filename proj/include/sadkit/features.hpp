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
#include <string>

#include "sadkit/audio.hpp"
#include "sadkit/matrix.hpp"

namespace sadkit::features {

struct MfccConfig {
  int n_mel_filters = 20;
  int n_ceps = 19;  // c1..c19; c0 is dropped
  int delta_window = 2;
  std::size_t nfft = 256;
  double preemphasis = 0.97;
  double low_hz = 0.0;
  double high_hz = 0.0;  // 0 means Nyquist

  void validate() const;
};

struct FeatureMatrix {
  RowMatrix vectors;  // frames x dim
  std::string source_id;

  Eigen::Index frames() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

inline constexpr double kLogFloor = 1e-10;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters, centers uniform on the mel axis, n_filters x
// (nfft/2 + 1). Throws kInvalidArgument when some filter covers no FFT bin.
RowMatrix mel_filterbank(const MfccConfig& config, int sample_rate);

// Center frequencies (Hz) of the filters above.
std::vector<double> mel_centers_hz(const MfccConfig& config, int sample_rate);

// y[n] = x[n] - coef * x[n-1], y[0] = x[0].
Waveform preemphasize(const Waveform& w, double coef);

// Static cepstra c1..c_n_ceps from frames that are already pre-emphasized
// and windowed: power spectrum, mel filterbank, log, orthonormal DCT-II.
FeatureMatrix extract_mfcc(const FrameSequence& frames,
                           const MfccConfig& config);

// Appends regression deltas over +-delta_window frames, replicating edge
// frames. Output dimension is twice the input.
FeatureMatrix append_deltas(const FeatureMatrix& static_features,
                            int delta_window);

// Per-dimension mean and variance normalization (population variance,
// floored at 1e-10).
FeatureMatrix cmvn(const FeatureMatrix& features);

// Whole chain for one utterance: pre-emphasis, Hamming framing, static
// cepstra, deltas. Rows align with frame_signal(w, framing).
FeatureMatrix compute_features(const Waveform& w, const FramingSpec& framing,
                               const MfccConfig& config);

// Feature file, little-endian:
//   "SKFT" u32 version u32 dim u64 count str utterance_id u64 config_hash
//   f32 payload[count * dim] (row-major)
void write_features(const std::filesystem::path& path,
                    const FeatureMatrix& features, std::uint64_t config_hash);

struct LoadedFeatures {
  FeatureMatrix features;
  std::uint64_t config_hash = 0;
};
LoadedFeatures read_features(const std::filesystem::path& path);

}  // namespace sadkit::features
