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


#include "sadkit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>

#include <spdlog/spdlog.h>
#include <unsupported/Eigen/FFT>

#include "detail/binary_io.hpp"
#include "sadkit/error.hpp"

namespace sadkit {

namespace {

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

struct WavFormat {
  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

std::size_t FramingSpec::frame_samples(int sample_rate) const {
  return ms_to_samples(frame_len_ms, sample_rate);
}

std::size_t FramingSpec::hop_samples(int sample_rate) const {
  return ms_to_samples(hop_ms, sample_rate);
}

void FramingSpec::validate(int sample_rate) const {
  if (sample_rate <= 0) {
    throw Error(Errc::kInvalidArgument, "sample rate must be positive");
  }
  if (!(hop_ms > 0.0) || hop_ms > frame_len_ms) {
    throw Error(Errc::kInvalidArgument,
                "framing requires 0 < hop_ms <= frame_len_ms");
  }
  if (frame_samples(sample_rate) < 1 || hop_samples(sample_rate) < 1) {
    throw Error(Errc::kInvalidArgument,
                "frame or hop rounds to zero samples at this sample rate");
  }
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, "cannot open " + path.string());
  }
  char tag[4];
  auto read_tag = [&](const char* expect) {
    if (!in.read(tag, 4) || std::string_view(tag, 4) != expect) {
      throw Error(Errc::kWavMalformed,
                  path.string() + ": missing " + expect + " tag");
    }
  };
  auto u32 = [&] {
    try {
      return detail::get_le<std::uint32_t>(in, "wav header");
    } catch (const Error&) {
      throw Error(Errc::kWavMalformed, path.string() + ": truncated header");
    }
  };
  auto u16 = [&] {
    try {
      return detail::get_le<std::uint16_t>(in, "wav header");
    } catch (const Error&) {
      throw Error(Errc::kWavMalformed, path.string() + ": truncated header");
    }
  };

  read_tag("RIFF");
  u32();
  read_tag("WAVE");

  WavFormat fmt;
  bool have_fmt = false;
  while (true) {
    if (!in.read(tag, 4)) {
      throw Error(Errc::kWavMalformed, path.string() + ": no data chunk");
    }
    std::uint32_t size = u32();
    std::string_view id(tag, 4);
    if (id == "fmt ") {
      if (size < 16) {
        throw Error(Errc::kWavMalformed, path.string() + ": short fmt chunk");
      }
      fmt.format_tag = u16();
      fmt.channels = u16();
      fmt.sample_rate = u32();
      u32();  // byte rate
      u16();  // block align
      fmt.bits = u16();
      in.ignore(size - 16 + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) {
        throw Error(Errc::kWavMalformed, path.string() + ": data before fmt");
      }
      if (fmt.format_tag != kFormatPcm && fmt.format_tag != kFormatExtensible) {
        throw Error(Errc::kWavMalformed,
                    path.string() + ": not PCM (format tag " +
                        std::to_string(fmt.format_tag) + ")");
      }
      if (fmt.channels != 1) {
        throw Error(Errc::kWavChannels,
                    path.string() + ": expected mono, got " +
                        std::to_string(fmt.channels) + " channels");
      }
      if (fmt.bits != 16) {
        throw Error(Errc::kWavBitDepth,
                    path.string() + ": expected 16-bit samples, got " +
                        std::to_string(fmt.bits));
      }
      if (fmt.sample_rate == 0) {
        throw Error(Errc::kWavMalformed, path.string() + ": zero sample rate");
      }
      Waveform w;
      w.sample_rate = static_cast<int>(fmt.sample_rate);
      w.id = path.stem().string();
      std::vector<std::int16_t> raw(size / 2);
      in.read(reinterpret_cast<char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * 2));
      raw.resize(static_cast<std::size_t>(in.gcount()) / 2);
      w.samples.reserve(raw.size());
      for (std::int16_t s : raw) {
        // Bytes were copied raw; reassemble explicitly in case the host is
        // big-endian.
        auto u = static_cast<std::uint16_t>(s);
        if constexpr (std::endian::native == std::endian::big) {
          u = static_cast<std::uint16_t>((u >> 8) | (u << 8));
        }
        w.samples.push_back(static_cast<std::int16_t>(u) / 32768.0);
      }
      return w;
    } else {
      in.ignore(size + (size & 1));
    }
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::kIo, "cannot write " + path.string());
  }
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  const auto rate = static_cast<std::uint32_t>(w.sample_rate);
  out.write("RIFF", 4);
  detail::put_le<std::uint32_t>(out, 36 + 2 * n);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::put_le<std::uint32_t>(out, 16);
  detail::put_le<std::uint16_t>(out, kFormatPcm);
  detail::put_le<std::uint16_t>(out, 1);
  detail::put_le<std::uint32_t>(out, rate);
  detail::put_le<std::uint32_t>(out, rate * 2);
  detail::put_le<std::uint16_t>(out, 2);
  detail::put_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  detail::put_le<std::uint32_t>(out, 2 * n);
  std::size_t clipped = 0;
  for (double x : w.samples) {
    double v = std::round(x * 32768.0);
    if (v > 32767.0 || v < -32768.0) {
      ++clipped;
      v = std::clamp(v, -32768.0, 32767.0);
    }
    detail::put_le<std::uint16_t>(
        out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (clipped > 0) {
    spdlog::warn("{}: {} samples saturated on 16-bit write", path.string(),
                 clipped);
  }
  if (!out) {
    throw Error(Errc::kIo, "write failed for " + path.string());
  }
}

std::size_t frame_count(std::size_t num_samples, std::size_t frame_len,
                        std::size_t hop) {
  if (frame_len == 0 || hop == 0 || num_samples < frame_len) return 0;
  return (num_samples - frame_len) / hop + 1;
}

std::vector<double> window_coefficients(Window window, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (window == Window::kHamming && length > 1) {
    for (std::size_t i = 0; i < length; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                    static_cast<double>(length - 1));
    }
  }
  return w;
}

FrameSequence frame_signal(const Waveform& w, const FramingSpec& spec) {
  spec.validate(w.sample_rate);
  const std::size_t len = spec.frame_samples(w.sample_rate);
  const std::size_t hop = spec.hop_samples(w.sample_rate);
  const std::size_t n = frame_count(w.samples.size(), len, hop);
  if (n == 0) {
    throw Error(Errc::kTooShort,
                "utterance '" + w.id + "' has " +
                    std::to_string(w.samples.size()) +
                    " samples, fewer than one frame of " + std::to_string(len));
  }
  FrameSequence out;
  out.spec = spec;
  out.sample_rate = w.sample_rate;
  out.source_id = w.id;
  out.frames.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(len));
  const auto win = window_coefficients(spec.window, len);
  for (std::size_t f = 0; f < n; ++f) {
    const double* src = w.samples.data() + f * hop;
    for (std::size_t i = 0; i < len; ++i) {
      out.frames(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)) =
          src[i] * win[i];
    }
  }
  return out;
}

FrameEnergies frame_energy(const FrameSequence& frames) {
  FrameEnergies e;
  e.linear.resize(frames.size());
  e.db.resize(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const double energy =
        frames.frames.row(static_cast<Eigen::Index>(f)).squaredNorm();
    e.linear[f] = energy;
    e.db[f] = 10.0 * std::log10(energy + kEnergyFloor);
  }
  return e;
}

std::vector<double> zero_crossing_rate(const FrameSequence& frames) {
  const std::size_t len = frames.frame_len();
  if (len < 2) {
    throw Error(Errc::kInvalidArgument, "zero crossing rate needs frames of >= 2 samples");
  }
  std::vector<double> zcr(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    auto row = frames.frames.row(static_cast<Eigen::Index>(f));
    std::size_t changes = 0;
    bool prev = row(0) >= 0.0;
    for (Eigen::Index i = 1; i < row.size(); ++i) {
      const bool cur = row(i) >= 0.0;
      changes += cur != prev;
      prev = cur;
    }
    zcr[f] = static_cast<double>(changes) / static_cast<double>(len - 1);
  }
  return zcr;
}

std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t nfft) {
  if (nfft < frame.size()) {
    throw Error(Errc::kInvalidArgument, "nfft shorter than frame");
  }
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> padded(nfft, 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) {
    power[k] = std::norm(spec[k]);
  }
  return power;
}

std::vector<double> avg_magnitude_spectrum(const Waveform& w,
                                           const FramingSpec& spec,
                                           std::size_t nfft) {
  const std::size_t len = spec.frame_samples(w.sample_rate);
  if (nfft < len) {
    throw Error(Errc::kInvalidArgument,
                "nfft " + std::to_string(nfft) + " is shorter than the frame (" +
                    std::to_string(len) + " samples)");
  }
  const FrameSequence frames = frame_signal(w, spec);
  std::vector<double> acc(nfft / 2 + 1, 0.0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    auto row = frames.frames.row(static_cast<Eigen::Index>(f));
    const auto power =
        power_spectrum(std::span<const double>(row.data(), len), nfft);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::sqrt(power[k]);
  }
  for (double& v : acc) v /= static_cast<double>(frames.size());
  return acc;
}

double mean_square(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace sadkit
