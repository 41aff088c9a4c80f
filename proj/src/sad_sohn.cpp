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

#include "sadkit/error.hpp"
#include "sadkit/sad.hpp"

namespace sadkit::sad {

void SohnConfig::validate() const {
  if (!(dd_alpha > 0.0 && dd_alpha < 1.0) ||
      !(noise_update >= 0.0 && noise_update < 1.0) || nfft < 2 ||
      init_frames < 1 || hangover_frames < 0) {
    throw Error(Errc::kInvalidArgument, "invalid statistical detector configuration");
  }
}

double sohn_bin_log_lr(double gamma, double xi) {
  return gamma * xi / (1.0 + xi) - std::log1p(xi);
}

SpeechMask sad_sohn(const FrameSequence& frames, const SohnConfig& config,
                    SohnTrace* trace) {
  config.validate();
  const std::size_t n = frames.size();
  if (n < static_cast<std::size_t>(config.init_frames)) {
    throw Error(Errc::kTooShort,
                "statistical detector needs at least " +
                    std::to_string(config.init_frames) + " frames, got " +
                    std::to_string(n));
  }
  const std::size_t nfft = std::max(config.nfft, frames.frame_len());
  const std::size_t bins = nfft / 2 + 1;
  std::vector<std::vector<double>> power(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = frames.frames.row(static_cast<Eigen::Index>(t));
    power[t] = power_spectrum(std::span<const double>(row.data(), frames.frame_len()), nfft);
  }

  // Leading frames are taken to be noise.
  std::vector<double> noise(bins, 0.0);
  for (int t = 0; t < config.init_frames; ++t) {
    for (std::size_t k = 0; k < bins; ++k) noise[k] += power[static_cast<std::size_t>(t)][k];
  }
  constexpr double kTiny = 1e-30;
  for (double& v : noise) v = std::max(v / config.init_frames, kTiny);

  std::vector<double> prev_amp2(bins, 0.0);  // clean amplitude^2 estimate
  SpeechMask mask;
  mask.spec = frames.spec;
  mask.source_id = frames.source_id;
  mask.decisions.assign(n, 0);
  if (trace) {
    trace->statistic.assign(n, 0.0);
    trace->raw.assign(n, 0);
  }
  int hang = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double stat = 0.0;
    std::vector<double> amp2(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      const double gamma = power[t][k] / noise[k];
      const double xi = config.dd_alpha * prev_amp2[k] / noise[k] +
                        (1.0 - config.dd_alpha) * std::max(gamma - 1.0, 0.0);
      stat += sohn_bin_log_lr(gamma, xi);
      const double gain = xi / (1.0 + xi);
      amp2[k] = gain * gain * power[t][k];
    }
    stat /= static_cast<double>(bins);
    prev_amp2 = std::move(amp2);

    const bool raw = stat > config.log_eta;
    bool speech = raw;
    if (raw) {
      hang = config.hangover_frames;
    } else if (hang > 0) {
      speech = true;
      --hang;
    }
    mask.decisions[t] = speech ? 1 : 0;
    if (trace) {
      trace->statistic[t] = stat;
      trace->raw[t] = raw ? 1 : 0;
    }
    if (!speech) {
      for (std::size_t k = 0; k < bins; ++k) {
        noise[k] = std::max(config.noise_update * noise[k] +
                                (1.0 - config.noise_update) * power[t][k],
                            kTiny);
      }
    }
  }
  return mask;
}

}  // namespace sadkit::sad
