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


#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "sadkit/error.hpp"
#include "sadkit/lpc.hpp"
#include "sadkit/sad.hpp"

namespace sadkit::sad {

namespace {

constexpr double kPcmScale = 32768.0;
constexpr double kEps = 1e-10;

struct FrameParams {
  double full_db = 0.0;
  double low_db = 0.0;
  double zcr = 0.0;
  double reflection = 0.0;  // second reflection coefficient
  std::vector<double> lsf;  // cycles/sample, in (0, 0.5)
};

// Background smoothing schedule: (energy, zcr, lsf) coefficients by number
// of updates so far.
struct UpdateCoefs {
  double energy, zcr, lsf;
};
UpdateCoefs update_coefs(int count) {
  if (count < 20) return {0.75, 0.8, 0.6};
  if (count < 30) return {0.95, 0.92, 0.65};
  if (count < 40) return {0.97, 0.94, 0.70};
  if (count < 50) return {0.99, 0.96, 0.75};
  if (count < 60) return {0.995, 0.99, 0.75};
  return {0.995, 0.998, 0.75};
}

std::vector<double> uniform_lsf(int order) {
  std::vector<double> lsf(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) lsf[static_cast<std::size_t>(i)] = 0.5 * (i + 1) / (order + 1);
  return lsf;
}

}  // namespace

std::vector<DecisionPlane> g729b_default_planes() {
  // Each rule of the standard is rewritten as c . (SD, dE, dEl, dZC) > bound.
  // dE / dEl are background minus frame, so loud frames have negative deltas.
  return {
      {1.0, 0.0, 0.0, -1.75e-3, 8.5e-4},          // SD > a0 dZC + b0
      {1.0, 0.0, 0.0, 4.545455e-3, 1.159091e-3},  // SD > a1 dZC + b1
      {0.0, -1.0, 0.0, -25.0, 5.0},               // dE < a2 dZC + b2
      {0.0, -1.0, 0.0, 20.0, 6.0},                // dE < a3 dZC + b3
      {0.0, -1.0, 0.0, 0.0, 4.7},                 // dE < b4
      {8800.0, -1.0, 0.0, 0.0, 12.2},             // dE < a5 SD + b5
      {1.0, 0.0, 0.0, 0.0, 9e-4},                 // SD > b6
      {0.0, 0.0, -1.0, 25.0, 7.0},                // dEl < a7 dZC + b7
      {0.0, 0.0, -1.0, -29.09091, 4.8182},        // dEl < a8 dZC + b8
      {0.0, 0.0, -1.0, 0.0, 5.3},                 // dEl < b9
      {14000.0, 0.0, -1.0, 0.0, 15.5},            // dEl < a10 SD + b10
      {0.0, -0.928571, 1.0, 0.0, 1.14285},        // dEl > a11 dE + b11
      {0.0, -1.5, -1.0, 0.0, 9.0},                // dEl < a12 dE + b12
      {0.0, 0.714285, -1.0, 0.0, 2.1428571},      // dEl < a13 dE + b13
  };
}

void G729bConfig::validate() const {
  if (init_frames < 1 || lpc_order < 2 || lpc_order % 2 != 0 || nfft < 2 ||
      !(low_band_hz > 0.0) || min_tracking_frames < 1 ||
      max_background_updates < 0 || min_burst_frames < 0 ||
      burst_silence_frames < 0 || hangover_frames < 0) {
    throw Error(Errc::kInvalidArgument, "invalid G.729B detector configuration");
  }
}

SpeechMask sad_g729b(const FrameSequence& frames, const G729bConfig& config,
                     G729Trace* trace) {
  config.validate();
  const std::size_t n = frames.size();
  const std::size_t len = frames.frame_len();
  if (n < static_cast<std::size_t>(config.init_frames)) {
    throw Error(Errc::kTooShort,
                "G.729B detector needs at least " +
                    std::to_string(config.init_frames) + " frames, got " +
                    std::to_string(n));
  }
  if (len < 2 || len <= static_cast<std::size_t>(config.lpc_order)) {
    throw Error(Errc::kInvalidArgument, "frames too short for LPC analysis");
  }
  const std::size_t nfft = std::max(config.nfft, len);
  const auto window = window_coefficients(Window::kHamming, len);
  const double bin_hz = static_cast<double>(frames.sample_rate) / static_cast<double>(nfft);
  const auto low_bins = static_cast<std::size_t>(
      std::min(std::floor(config.low_band_hz / bin_hz), static_cast<double>(nfft / 2)));
  const auto zcr = zero_crossing_rate(frames);

  // Per-frame parameters.
  std::vector<FrameParams> params(n);
  std::vector<double> last_lsf = uniform_lsf(config.lpc_order);
  std::vector<double> windowed(len);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = frames.frames.row(static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < len; ++i) windowed[i] = row(static_cast<Eigen::Index>(i)) * kPcmScale * window[i];
    auto r = lpc::autocorrelation(windowed, config.lpc_order);
    FrameParams& p = params[t];
    p.full_db = 10.0 * std::log10(r[0] / static_cast<double>(len) + kEps);
    const auto power = power_spectrum(windowed, nfft);
    double low = power[0];
    for (std::size_t k = 1; k <= low_bins; ++k) low += 2.0 * power[k];
    p.low_db = 10.0 * std::log10(low / static_cast<double>(nfft) / static_cast<double>(len) + kEps);
    p.zcr = zcr[t];
    r[0] *= 1.0001;  // white-noise correction keeps A(z) minimum phase
    const auto lpc = lpc::levinson_durbin(r, config.lpc_order);
    p.reflection = lpc.reflection[1];
    auto lsf = lpc::lpc_to_lsf(lpc.a);
    if (lsf) {
      for (double& v : *lsf) v /= 2.0 * std::numbers::pi;
      last_lsf = *lsf;
    }
    p.lsf = last_lsf;
  }

  // Online decision with running background estimate.
  std::vector<std::uint8_t> online(n, 0);
  if (trace) {
    trace->deltas.assign(n, {});
    trace->initial.assign(n, 0);
    trace->full_band_db.resize(n);
    trace->background_updates.assign(n, 0);
    for (std::size_t t = 0; t < n; ++t) trace->full_band_db[t] = params[t].full_db;
  }
  const auto order = static_cast<std::size_t>(config.lpc_order);
  double mean_e = 0.0, mean_low = 0.0, mean_zcr = 0.0;
  std::vector<double> mean_lsf(order, 0.0);
  int counted = 0;
  double bg_full = 0.0, bg_low = 0.0;
  int updates = 0;
  std::deque<double> recent;  // energies over the min-tracking window
  bool prev_active = false;

  for (std::size_t t = 0; t < n; ++t) {
    const FrameParams& p = params[t];
    recent.push_back(p.full_db);
    if (recent.size() > static_cast<std::size_t>(config.min_tracking_frames)) recent.pop_front();

    if (t < static_cast<std::size_t>(config.init_frames)) {
      // Initialization: frames above the gate feed the background averages
      // and are reported inactive.
      if (p.full_db >= config.energy_gate_db) {
        ++counted;
        const double k = 1.0 / counted;
        mean_e += k * (p.full_db - mean_e);
        mean_low += k * (p.low_db - mean_low);
        mean_zcr += k * (p.zcr - mean_zcr);
        for (std::size_t i = 0; i < order; ++i) mean_lsf[i] += k * (p.lsf[i] - mean_lsf[i]);
      }
      if (counted == 0) mean_lsf = p.lsf;
      if (t + 1 == static_cast<std::size_t>(config.init_frames)) {
        bg_full = mean_e;
        bg_low = mean_low;
      }
      continue;
    }

    G729Deltas d;
    for (std::size_t i = 0; i < order; ++i) {
      const double diff = p.lsf[i] - mean_lsf[i];
      d.spectral_distortion += diff * diff;
    }
    d.full_band = bg_full - p.full_db;
    d.low_band = bg_low - p.low_db;
    d.zcr = mean_zcr - p.zcr;

    bool active = false;
    if (p.full_db >= config.energy_gate_db) {
      for (const auto& plane : config.planes) {
        if (plane.active(d)) {
          active = true;
          break;
        }
      }
    }
    const bool initial = active;

    // Smoothing 1: energy continuity after an active frame.
    bool continued = false;
    if (prev_active && !active && p.full_db > bg_full + config.continuity_margin_db &&
        p.full_db > config.energy_gate_db) {
      active = true;
      continued = true;
    }
    // Smoothing 2: low-energy, noise-like spectrum veto.
    if (active && !continued && t > static_cast<std::size_t>(config.veto_after_frames) &&
        p.full_db < bg_full + config.veto_margin_db &&
        p.reflection < config.veto_reflection) {
      active = false;
    }
    online[t] = active ? 1 : 0;

    // Background update on inactive frames.
    if (!active && p.full_db < bg_full + config.update_margin_db &&
        p.reflection < config.update_reflection &&
        d.spectral_distortion < config.update_max_distortion &&
        updates < config.max_background_updates) {
      const UpdateCoefs c = update_coefs(updates);
      ++updates;
      bg_full = c.energy * bg_full + (1.0 - c.energy) * p.full_db;
      bg_low = c.energy * bg_low + (1.0 - c.energy) * p.low_db;
      mean_zcr = c.zcr * mean_zcr + (1.0 - c.zcr) * p.zcr;
      for (std::size_t i = 0; i < order; ++i) {
        mean_lsf[i] = c.lsf * mean_lsf[i] + (1.0 - c.lsf) * p.lsf[i];
      }
    }
    // Re-anchor the background on the recent minimum energy.
    if (t > static_cast<std::size_t>(config.min_tracking_frames)) {
      const double floor_e = *std::min_element(recent.begin(), recent.end());
      if ((bg_full < floor_e && d.spectral_distortion < config.update_max_distortion) ||
          bg_full > floor_e + config.min_reset_margin_db) {
        bg_full = floor_e;
        updates = 0;
      }
    }
    prev_active = active;
    if (trace) {
      trace->deltas[t] = d;
      trace->initial[t] = initial ? 1 : 0;
      trace->background_updates[t] = updates;
    }
  }
  if (trace) trace->online = online;

  SpeechMask mask;
  mask.spec = frames.spec;
  mask.source_id = frames.source_id;
  // Smoothing 3 and 4: burst deletion and hangover.
  mask.decisions = smooth_runs(std::move(online), config.min_burst_frames,
                               config.burst_silence_frames, config.hangover_frames);
  return mask;
}

}  // namespace sadkit::sad
