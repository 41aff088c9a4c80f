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


// Experiment orchestration shared by the command-line tool and the
// end-to-end tests: manifests, configuration, and the pipeline stages.
//
// Every artifact a stage writes carries a hash of the configuration that
// produced it (and, transitively, of the upstream stages). A stage refuses
// inputs whose recorded hash differs from what the current configuration
// would have produced.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sadkit/audio.hpp"
#include "sadkit/eval.hpp"
#include "sadkit/features.hpp"
#include "sadkit/gmm.hpp"
#include "sadkit/noise.hpp"
#include "sadkit/sad.hpp"

namespace sadkit::pipeline {

namespace fs = std::filesystem;

enum class SadMethod { kNone, kG729b, kSmsad, kMebts, kAebts, kUbgme };

// Accepts the lowercase abbreviations (g729b, smsad, mebts, aebts, ubgme,
// none); case-insensitive, and "g.729b" is accepted for g729b.
SadMethod parse_sad_method(std::string_view name);
std::string_view sad_method_name(SadMethod method);

enum class Role { kUbm, kTrain, kTest, kCohort };
Role parse_role(std::string_view name);
std::string_view role_name(Role role);

struct Utterance {
  std::string id;
  fs::path path;
  std::string speaker;
  std::string gender;
  Role role = Role::kTest;
};

struct Manifest {
  std::vector<Utterance> utterances;
  std::map<std::string, fs::path> noises;
  fs::path trials;
  fs::path source;  // file the manifest was read from

  const Utterance& find(const std::string& id) const;
  std::vector<Utterance> select(const std::set<Role>& roles,
                                const std::string& gender = {}) const;
};

// Relative paths resolve against the manifest's directory. Ids must be
// unique; with check_files, every referenced file must exist.
Manifest load_manifest(const fs::path& path, bool check_files = true);
void write_manifest(const fs::path& path, const Manifest& manifest);
std::uint64_t manifest_hash(const Manifest& manifest);

struct NoiseSettings {
  enum class Mode { kFixed, kPolicy } mode = Mode::kFixed;
  std::string noise_id;  // fixed mode
  double snr_db = 10.0;  // fixed mode
  std::vector<std::string> pool;  // policy mode
  double snr_lo_db = 0.0;
  double snr_hi_db = 40.0;
  bool allow_wrap = false;
  std::set<Role> roles = {Role::kTest};
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int jobs = 1;  // not part of any hash
  FramingSpec framing;
  SadMethod sad_method = SadMethod::kUbgme;
  double aebts_factor = 0.06;
  double mebts_margin_db = 30.0;
  sad::SohnConfig sohn;
  sad::G729bConfig g729b;
  sad::BiGaussianConfig bigaussian;
  features::MfccConfig mfcc;
  bool cmvn = false;
  int mixtures = 256;
  gmm::EmConfig em;
  gmm::MapConfig map;
  int top_c = 5;  // capped at the UBM size when scoring
  eval::DcfParams dcf;
  std::optional<NoiseSettings> noise;

  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const fs::path& path);

// "section.key=value"; value parsed as JSON when possible, else as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct StageHashes {
  std::uint64_t sad = 0;
  std::uint64_t features = 0;
  std::uint64_t ubm = 0;
  std::uint64_t models = 0;
  std::uint64_t scores = 0;
};
StageHashes stage_hashes(const ExperimentConfig& config);

// ---- per-utterance work -------------------------------------------------

sad::SpeechMask compute_mask(const Waveform& w, const ExperimentConfig& config);

struct UtteranceFeatures {
  features::FeatureMatrix features;  // after masking (and CMVN if enabled)
  sad::SpeechMask mask;
  bool fell_back = false;  // mask kept no frames; all frames were used
};
UtteranceFeatures compute_utterance_features(const Waveform& w,
                                             const ExperimentConfig& config);

// ---- stages ---------------------------------------------------------------

struct SadSummary {
  std::size_t utterances = 0;
  std::size_t frames = 0;
  std::size_t speech_frames = 0;

  double retained() const {
    return frames ? static_cast<double>(speech_frames) / static_cast<double>(frames) : 0.0;
  }
};

SadSummary run_sad(const std::vector<Utterance>& utterances,
                   const ExperimentConfig& config, const fs::path& mask_file);

struct MixSummary {
  std::vector<noise::Provenance> records;
  fs::path manifest;
  fs::path provenance;
};
MixSummary run_mix(const Manifest& manifest, const ExperimentConfig& config,
                   const fs::path& out_dir);

SadSummary run_extract(const Manifest& manifest, const ExperimentConfig& config,
                       const fs::path& feature_dir,
                       const std::set<Role>& roles = {Role::kUbm, Role::kTrain,
                                                      Role::kTest, Role::kCohort});

void run_train_ubm(const Manifest& manifest, const ExperimentConfig& config,
                   const fs::path& feature_dir, const fs::path& ubm_path,
                   const std::string& gender = {});

// Adapts one model per speaker of the given roles; writes
// <model_dir>/<speaker>.gmm.
std::vector<std::string> run_adapt(const Manifest& manifest,
                                   const ExperimentConfig& config,
                                   const fs::path& feature_dir,
                                   const fs::path& ubm_path,
                                   const fs::path& model_dir,
                                   const std::set<Role>& roles = {Role::kTrain});

eval::TrialScoreSet run_score(const Manifest& manifest,
                              const ExperimentConfig& config,
                              const fs::path& feature_dir,
                              const fs::path& ubm_path,
                              const fs::path& model_dir,
                              const fs::path& score_file);

// Scores every test segment of the trial list against every cohort model.
eval::TrialScoreSet run_cohort_score(const Manifest& manifest,
                                     const ExperimentConfig& config,
                                     const fs::path& feature_dir,
                                     const fs::path& ubm_path,
                                     const fs::path& model_dir,
                                     const fs::path& score_file);

eval::TrialScoreSet run_tnorm(const fs::path& raw_scores,
                              const fs::path& cohort_scores,
                              const fs::path& out_scores);

eval::MetricReport run_eval(const fs::path& score_file,
                            const eval::DcfParams& params,
                            const fs::path& report_file,
                            const fs::path& det_csv);

// Average magnitude spectrum over all frames of all inputs; CSV with
// columns freq_hz,magnitude.
std::vector<double> run_spectrum(const std::vector<fs::path>& wavs,
                                 const FramingSpec& framing, std::size_t nfft,
                                 const fs::path& csv);

// Writes via a temporary file and rename.
template <typename Fn>
void write_atomically(const fs::path& path, Fn&& write) {
  fs::path tmp = path;
  tmp += ".tmp";
  write(tmp);
  fs::rename(tmp, path);
}

}  // namespace sadkit::pipeline
