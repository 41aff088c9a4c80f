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
#include <span>
#include <string>
#include <vector>

#include "sadkit/audio.hpp"
#include "sadkit/matrix.hpp"

namespace sadkit::sad {

struct SpeechMask {
  std::vector<std::uint8_t> decisions;  // 1 = speech
  FramingSpec spec;
  std::string source_id;

  std::size_t size() const { return decisions.size(); }
  std::size_t speech_frames() const;
};

// Average-energy threshold: speech iff E_i > factor * mean(E), on linear
// energies.
SpeechMask sad_aebts(std::span<const double> energies, double factor = 0.06);

// Max-energy threshold: speech iff E_dB >= max(E_dB) - margin_db.
SpeechMask sad_mebts(std::span<const double> energies_db,
                     double margin_db = 30.0);

// ---------------------------------------------------------------------------
// Two-component log-energy model.

// Component 1 is the low-energy (noise) cluster.
struct BiGaussianModel {
  double w1 = 0.5, w2 = 0.5;
  double mu1 = 0.0, mu2 = 0.0;
  double var1 = 1.0, var2 = 1.0;
  double theta = 0.0;
  // Set when the weighted densities do not cross between the means and theta
  // was pinned to one of them.
  bool no_crossing = false;
};

struct BiGaussianConfig {
  int max_iters = 200;
  double loglik_rel_tol = 1e-8;
  double variance_floor = 1e-4;  // dB^2
  std::uint64_t rng_seed = 0;    // only used for the perturbed refit
};

// Point in [mu1, mu2] where w1 N(x; mu1, var1) = w2 N(x; mu2, var2), by
// bisection to 1e-7 dB. Requires mu1 < mu2. When there is no crossing the
// nearer center is returned and *no_crossing (if given) is set.
double equal_density_threshold(double w1, double mu1, double var1, double w2,
                               double mu2, double var2,
                               bool* no_crossing = nullptr);

// EM fit (via the gmm module) initialized from the 10th / 90th percentiles.
// Throws kDegenerate for constant input or coincident means, kNumerical if
// a variance collapses onto the floor twice.
BiGaussianModel fit_bigaussian(std::span<const double> log_energies,
                               const BiGaussianConfig& config = {});

SpeechMask sad_ubgme(std::span<const double> log_energies,
                     const BiGaussianConfig& config = {});

// ---------------------------------------------------------------------------
// Likelihood-ratio detector with decision-directed a-priori SNR.

struct SohnConfig {
  double dd_alpha = 0.99;
  double log_eta = 0.15;
  double noise_update = 0.98;  // lambda <- c * lambda + (1 - c) |X|^2
  std::size_t nfft = 256;
  int init_frames = 10;
  int hangover_frames = 8;

  void validate() const;
};

// gamma * xi / (1 + xi) - log(1 + xi)
double sohn_bin_log_lr(double gamma, double xi);

struct SohnTrace {
  std::vector<double> statistic;  // mean per-bin log-LR, per frame
  std::vector<std::uint8_t> raw;  // before hangover
};

SpeechMask sad_sohn(const FrameSequence& frames, const SohnConfig& config = {},
                    SohnTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// G.729 Annex B style detector.

// Features of one frame relative to the running background estimate.
struct G729Deltas {
  double spectral_distortion = 0.0;  // sum (lsf - mean_lsf)^2, lsf in cycles/sample
  double full_band = 0.0;            // background - frame, dB
  double low_band = 0.0;             // background - frame, dB
  double zcr = 0.0;                  // background - frame
};

// Active when sd*c_sd + full*c_full + low*c_low + zcr*c_zcr > bound.
struct DecisionPlane {
  double c_sd = 0.0, c_full = 0.0, c_low = 0.0, c_zcr = 0.0;
  double bound = 0.0;

  bool active(const G729Deltas& d) const {
    return c_sd * d.spectral_distortion + c_full * d.full_band +
               c_low * d.low_band + c_zcr * d.zcr >
           bound;
  }
};

// The fourteen planes of the standard's floating-point decision rule.
std::vector<DecisionPlane> g729b_default_planes();

struct G729bConfig {
  int init_frames = 32;
  int lpc_order = 10;
  std::size_t nfft = 256;
  double low_band_hz = 1000.0;
  // Energies are measured on 16-bit scale samples so the standard's absolute
  // level constants apply.
  double energy_gate_db = 21.0;
  double continuity_margin_db = 2.0;
  double veto_margin_db = 3.0;
  double veto_reflection = 0.6;
  int veto_after_frames = 32;
  double update_margin_db = 3.0;
  double update_reflection = 0.75;
  double update_max_distortion = 0.002532959;
  // Background statistics stop adapting after this many updates; the
  // minimum-energy reset re-arms them.
  int max_background_updates = 60;
  int min_tracking_frames = 128;
  double min_reset_margin_db = 10.0;
  int min_burst_frames = 2;
  int burst_silence_frames = 10;
  int hangover_frames = 4;
  std::vector<DecisionPlane> planes = g729b_default_planes();

  void validate() const;
};

struct G729Trace {
  std::vector<G729Deltas> deltas;
  std::vector<std::uint8_t> initial;   // multiboundary decision
  std::vector<std::uint8_t> online;    // after continuity + veto
  std::vector<double> full_band_db;
  std::vector<int> background_updates;
};

// Frames are taken as delivered (rectangular); a Hamming window is applied
// internally for the LPC and energy analysis.
SpeechMask sad_g729b(const FrameSequence& frames,
                     const G729bConfig& config = {},
                     G729Trace* trace = nullptr);

// Removes active runs shorter than min_burst that follow at least
// silence_before inactive frames, then extends every surviving run by
// `hangover` frames.
std::vector<std::uint8_t> smooth_runs(std::vector<std::uint8_t> decisions,
                                      int min_burst, int silence_before,
                                      int hangover);

// ---------------------------------------------------------------------------

// Rows where the mask is set, in order. An all-false mask gives an empty
// matrix.
RowMatrix apply_mask(const RowMatrix& rows, const SpeechMask& mask);

// "utt_id 1x40 0x12 1x300"
std::string format_mask(const SpeechMask& mask);
SpeechMask parse_mask(const std::string& line);

struct MaskFile {
  std::uint64_t config_hash = 0;
  std::vector<SpeechMask> masks;
};
void write_mask_file(const std::filesystem::path& path, const MaskFile& file);
MaskFile read_mask_file(const std::filesystem::path& path);

}  // namespace sadkit::sad
