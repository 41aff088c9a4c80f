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


#include "sadkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "detail/binary_io.hpp"
#include "sadkit/error.hpp"

namespace sadkit::features {

void MfccConfig::validate() const {
  if (n_mel_filters < 2 || n_ceps < 1 || n_ceps >= n_mel_filters ||
      delta_window < 1 || nfft < 2 || preemphasis < 0.0 || preemphasis >= 1.0 ||
      low_hz < 0.0 || high_hz < 0.0) {
    throw Error(Errc::kInvalidArgument, "invalid MFCC configuration");
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

namespace {

std::vector<double> mel_edges_hz(const MfccConfig& config, int sample_rate) {
  const double nyquist = sample_rate / 2.0;
  const double high = config.high_hz > 0.0 ? std::min(config.high_hz, nyquist) : nyquist;
  if (!(config.low_hz < high)) {
    throw Error(Errc::kInvalidArgument, "filterbank low edge must lie below the high edge");
  }
  const double lo_mel = hz_to_mel(config.low_hz);
  const double hi_mel = hz_to_mel(high);
  const int points = config.n_mel_filters + 2;
  std::vector<double> edges(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    edges[static_cast<std::size_t>(i)] =
        mel_to_hz(lo_mel + (hi_mel - lo_mel) * i / (points - 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_centers_hz(const MfccConfig& config, int sample_rate) {
  auto edges = mel_edges_hz(config, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

RowMatrix mel_filterbank(const MfccConfig& config, int sample_rate) {
  config.validate();
  if (sample_rate <= 0) {
    throw Error(Errc::kInvalidArgument, "sample rate must be positive");
  }
  const auto edges = mel_edges_hz(config, sample_rate);
  const std::size_t bins = config.nfft / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(config.nfft);
  RowMatrix fb = RowMatrix::Zero(config.n_mel_filters, static_cast<Eigen::Index>(bins));
  for (int m = 0; m < config.n_mel_filters; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, static_cast<Eigen::Index>(k)) = w;
    }
    if (!(fb.row(m).sum() > 0.0)) {
      throw Error(Errc::kInvalidArgument,
                  "nfft " + std::to_string(config.nfft) +
                      " is too small to resolve mel filter " + std::to_string(m));
    }
  }
  return fb;
}

Waveform preemphasize(const Waveform& w, double coef) {
  Waveform out = w;
  for (std::size_t i = w.samples.size(); i-- > 1;) {
    out.samples[i] = w.samples[i] - coef * w.samples[i - 1];
  }
  return out;
}

FeatureMatrix extract_mfcc(const FrameSequence& frames,
                           const MfccConfig& config) {
  config.validate();
  if (config.nfft < frames.frame_len()) {
    throw Error(Errc::kInvalidArgument, "nfft shorter than the frame");
  }
  const RowMatrix fb = mel_filterbank(config, frames.sample_rate);
  const int nm = config.n_mel_filters;
  // Orthonormal DCT-II rows 1..n_ceps.
  RowMatrix dct(config.n_ceps, nm);
  for (int c = 1; c <= config.n_ceps; ++c) {
    for (int m = 0; m < nm; ++m) {
      dct(c - 1, m) = std::sqrt(2.0 / nm) *
                      std::cos(std::numbers::pi * c * (m + 0.5) / nm);
    }
  }
  FeatureMatrix out;
  out.source_id = frames.source_id;
  out.vectors.resize(static_cast<Eigen::Index>(frames.size()), config.n_ceps);
  Eigen::VectorXd logfb(nm);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    auto row = frames.frames.row(static_cast<Eigen::Index>(t));
    const auto power = power_spectrum(std::span<const double>(row.data(), frames.frame_len()),
                                      config.nfft);
    const Eigen::Map<const Eigen::VectorXd> p(power.data(), static_cast<Eigen::Index>(power.size()));
    const Eigen::VectorXd energies = fb * p;
    for (int m = 0; m < nm; ++m) logfb(m) = std::log(std::max(energies(m), kLogFloor));
    out.vectors.row(static_cast<Eigen::Index>(t)) = (dct * logfb).transpose();
  }
  return out;
}

FeatureMatrix append_deltas(const FeatureMatrix& in, int delta_window) {
  if (delta_window < 1) {
    throw Error(Errc::kInvalidArgument, "delta window must be >= 1");
  }
  const Eigen::Index n = in.frames();
  if (n < 2 * delta_window + 1) {
    throw Error(Errc::kTooShort,
                "deltas over +-" + std::to_string(delta_window) + " need " +
                    std::to_string(2 * delta_window + 1) + " frames, got " +
                    std::to_string(n));
  }
  const Eigen::Index d = in.dim();
  double denom = 0.0;
  for (int k = 1; k <= delta_window; ++k) denom += 2.0 * k * k;
  FeatureMatrix out;
  out.source_id = in.source_id;
  out.vectors.resize(n, 2 * d);
  out.vectors.leftCols(d) = in.vectors;
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (int k = 1; k <= delta_window; ++k) {
      const Eigen::Index fwd = std::min(t + k, n - 1);
      const Eigen::Index back = std::max<Eigen::Index>(t - k, 0);
      acc += k * (in.vectors.row(fwd) - in.vectors.row(back));
    }
    out.vectors.block(t, d, 1, d) = acc / denom;
  }
  return out;
}

FeatureMatrix cmvn(const FeatureMatrix& in) {
  if (in.frames() < 2) {
    throw Error(Errc::kTooShort, "CMVN needs at least two frames");
  }
  FeatureMatrix out = in;
  const Eigen::RowVectorXd mean = in.vectors.colwise().mean();
  out.vectors.rowwise() -= mean;
  const Eigen::RowVectorXd var =
      out.vectors.array().square().colwise().mean().matrix().cwiseMax(1e-10);
  out.vectors.array().rowwise() /= var.array().sqrt();
  return out;
}

FeatureMatrix compute_features(const Waveform& w, const FramingSpec& framing,
                               const MfccConfig& config) {
  FramingSpec spec = framing;
  spec.window = Window::kHamming;
  const FrameSequence frames = frame_signal(preemphasize(w, config.preemphasis), spec);
  return append_deltas(extract_mfcc(frames, config), config.delta_window);
}

void write_features(const std::filesystem::path& path,
                    const FeatureMatrix& features, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write("SKFT", 4);
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.dim()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(features.frames()));
  detail::put_string(out, features.source_id);
  detail::put_le<std::uint64_t>(out, config_hash);
  const auto& v = features.vectors;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    detail::put_f32(out, static_cast<float>(v.data()[i]));
  }
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

LoadedFeatures read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "SKFT") {
    throw Error(Errc::kFormat, path.string() + " is not a feature file");
  }
  const auto version = detail::get_le<std::uint32_t>(in, "feature version");
  if (version != 1) {
    throw Error(Errc::kFormat, "unsupported feature file version " + std::to_string(version));
  }
  const auto dim = detail::get_le<std::uint32_t>(in, "feature dim");
  const auto count = detail::get_le<std::uint64_t>(in, "feature count");
  if (dim == 0 || dim > 4096 || count > (1ull << 32)) {
    throw Error(Errc::kFormat, path.string() + ": implausible feature shape");
  }
  LoadedFeatures lf;
  lf.features.source_id = detail::get_string(in, "feature id");
  lf.config_hash = detail::get_le<std::uint64_t>(in, "feature config hash");
  lf.features.vectors.resize(static_cast<Eigen::Index>(count), dim);
  auto& v = lf.features.vectors;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v.data()[i] = detail::get_f32(in, "feature payload");
  }
  return lf;
}

}  // namespace sadkit::features
