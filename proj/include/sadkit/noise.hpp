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
#include <map>
#include <string>
#include <vector>

#include "sadkit/audio.hpp"

namespace sadkit::noise {

struct NoiseMixSpec {
  std::string noise_id;
  double snr_db = 10.0;
  std::uint64_t rng_seed = 0;
  bool allow_wrap = false;
};

// Random noise type and SNR per utterance.
struct DistortionPolicy {
  std::vector<std::string> noise_pool;
  double snr_lo_db = 0.0;
  double snr_hi_db = 40.0;
  std::uint64_t rng_seed = 0;
  bool allow_wrap = false;

  void validate() const;
};

struct MixResult {
  Waveform mixed;
  // a * noise[offset + n (mod len if wrapping)] is what was added.
  std::size_t offset = 0;
  double scale = 0.0;
};

// One line per utterance: "utt_id noise_id snr_db offset".
struct Provenance {
  std::string utterance_id;
  std::string noise_id;
  double snr_db = 0.0;
  std::size_t offset = 0;
};

using NoiseRegistry = std::map<std::string, Waveform>;

// Adds a random segment of `noise`, scaled so that the mean-square ratio of
// speech to added noise is exactly snr_db. The offset is drawn from
// spec.rng_seed.
MixResult mix_noise(const Waveform& speech, const Waveform& noise,
                    const NoiseMixSpec& spec);

// Deterministic replay: same arithmetic as mix_noise with a fixed offset.
MixResult mix_at_offset(const Waveform& speech, const Waveform& noise,
                        double snr_db, std::size_t offset, bool allow_wrap);

// Each utterance draws (noise, snr, offset) from its own stream seeded by
// (policy.rng_seed, utterance id); results do not depend on input order.
std::vector<std::pair<Waveform, Provenance>> distort_corpus(
    const std::vector<Waveform>& utterances, const NoiseRegistry& noises,
    const DistortionPolicy& policy);

// Draws that distort_corpus would make for one utterance, without mixing.
struct Draw {
  std::string noise_id;
  double snr_db = 0.0;
  std::uint64_t offset_seed = 0;
};
Draw draw_distortion(const std::string& utterance_id,
                     const DistortionPolicy& policy);

std::string format_provenance(const Provenance& p);
Provenance parse_provenance(const std::string& line);
void write_provenance(const std::filesystem::path& path,
                      const std::vector<Provenance>& records);
std::vector<Provenance> read_provenance(const std::filesystem::path& path);

// Manifest lines: "noise_id path"; relative paths resolve against the
// manifest's directory. Blank lines and '#' comments are skipped.
std::map<std::string, std::filesystem::path> read_noise_manifest(
    const std::filesystem::path& path);
NoiseRegistry load_noise_registry(
    const std::map<std::string, std::filesystem::path>& entries);

}  // namespace sadkit::noise
