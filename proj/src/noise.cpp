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


#include "sadkit/noise.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sadkit/error.hpp"
#include "sadkit/hash.hpp"

namespace sadkit::noise {

namespace {

double segment_mean_square(const std::vector<double>& noise,
                           std::size_t offset, std::size_t length) {
  double acc = 0.0;
  const std::size_t n = noise.size();
  for (std::size_t i = 0; i < length; ++i) {
    const double v = noise[(offset + i) % n];
    acc += v * v;
  }
  return acc / static_cast<double>(length);
}

void check_mixable(const Waveform& speech, const Waveform& noise,
                   bool allow_wrap) {
  if (speech.samples.empty()) {
    throw Error(Errc::kTooShort, "empty speech utterance '" + speech.id + "'");
  }
  if (noise.samples.empty()) {
    throw Error(Errc::kNoiseTooShort, "empty noise signal '" + noise.id + "'");
  }
  if (speech.sample_rate != noise.sample_rate) {
    throw Error(Errc::kSampleRateMismatch,
                "speech '" + speech.id + "' at " +
                    std::to_string(speech.sample_rate) + " Hz, noise '" +
                    noise.id + "' at " + std::to_string(noise.sample_rate) +
                    " Hz");
  }
  if (!allow_wrap && noise.samples.size() < speech.samples.size()) {
    throw Error(Errc::kNoiseTooShort,
                "noise '" + noise.id + "' (" +
                    std::to_string(noise.samples.size()) +
                    " samples) is shorter than speech '" + speech.id + "' (" +
                    std::to_string(speech.samples.size()) +
                    "); enable wrap-around to allow this");
  }
}

}  // namespace

void DistortionPolicy::validate() const {
  if (noise_pool.empty()) {
    throw Error(Errc::kInvalidArgument, "distortion policy has an empty noise pool");
  }
  if (!std::isfinite(snr_lo_db) || !std::isfinite(snr_hi_db) ||
      snr_lo_db > snr_hi_db) {
    throw Error(Errc::kInvalidArgument, "distortion policy needs finite lo <= hi");
  }
}

MixResult mix_at_offset(const Waveform& speech, const Waveform& noise,
                        double snr_db, std::size_t offset, bool allow_wrap) {
  check_mixable(speech, noise, allow_wrap);
  if (!std::isfinite(snr_db)) {
    throw Error(Errc::kInvalidArgument, "SNR must be finite");
  }
  const std::size_t len = speech.samples.size();
  if (!allow_wrap && offset + len > noise.samples.size()) {
    throw Error(Errc::kInvalidArgument, "noise offset runs past the end of the noise");
  }
  offset %= noise.samples.size();

  const double ps = mean_square(speech.samples);
  if (!(ps > 0.0)) {
    throw Error(Errc::kZeroPower, "speech '" + speech.id + "' has zero power");
  }
  const double pn = segment_mean_square(noise.samples, offset, len);
  if (!(pn > 0.0)) {
    throw Error(Errc::kZeroPower,
                "selected segment of noise '" + noise.id + "' has zero power");
  }

  MixResult r;
  r.offset = offset;
  r.scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  r.mixed.id = speech.id;
  r.mixed.sample_rate = speech.sample_rate;
  r.mixed.samples.resize(len);
  const std::size_t n = noise.samples.size();
  bool over = false;
  for (std::size_t i = 0; i < len; ++i) {
    const double v = speech.samples[i] + r.scale * noise.samples[(offset + i) % n];
    over |= std::abs(v) > 1.0;
    r.mixed.samples[i] = v;
  }
  if (over) {
    spdlog::warn("mixed '{}' exceeds full scale; samples left unclipped",
                 speech.id);
  }
  return r;
}

MixResult mix_noise(const Waveform& speech, const Waveform& noise,
                    const NoiseMixSpec& spec) {
  check_mixable(speech, noise, spec.allow_wrap);
  std::mt19937_64 rng(spec.rng_seed);
  const std::size_t last = spec.allow_wrap
                               ? noise.samples.size() - 1
                               : noise.samples.size() - speech.samples.size();
  std::uniform_int_distribution<std::size_t> pick(0, last);
  return mix_at_offset(speech, noise, spec.snr_db, pick(rng), spec.allow_wrap);
}

Draw draw_distortion(const std::string& utterance_id,
                     const DistortionPolicy& policy) {
  std::mt19937_64 rng(derive_seed(policy.rng_seed, utterance_id));
  std::uniform_int_distribution<std::size_t> pick(0, policy.noise_pool.size() - 1);
  Draw d;
  d.noise_id = policy.noise_pool[pick(rng)];
  const double u = std::generate_canonical<double, 64>(rng);
  d.snr_db = policy.snr_lo_db + (policy.snr_hi_db - policy.snr_lo_db) * u;
  d.offset_seed = rng();
  return d;
}

std::vector<std::pair<Waveform, Provenance>> distort_corpus(
    const std::vector<Waveform>& utterances, const NoiseRegistry& noises,
    const DistortionPolicy& policy) {
  policy.validate();
  for (const auto& id : policy.noise_pool) {
    if (!noises.contains(id)) {
      throw Error(Errc::kNotFound, "noise '" + id + "' is not registered");
    }
  }
  std::vector<std::pair<Waveform, Provenance>> out;
  out.reserve(utterances.size());
  for (const auto& utt : utterances) {
    const Draw d = draw_distortion(utt.id, policy);
    NoiseMixSpec spec{d.noise_id, d.snr_db, d.offset_seed, policy.allow_wrap};
    MixResult r = mix_noise(utt, noises.at(d.noise_id), spec);
    Provenance p{utt.id, d.noise_id, d.snr_db, r.offset};
    out.emplace_back(std::move(r.mixed), std::move(p));
  }
  return out;
}

std::string format_provenance(const Provenance& p) {
  char snr[32];
  std::snprintf(snr, sizeof(snr), "%.17g", p.snr_db);
  return p.utterance_id + " " + p.noise_id + " " + snr + " " +
         std::to_string(p.offset);
}

Provenance parse_provenance(const std::string& line) {
  std::istringstream is(line);
  Provenance p;
  std::string snr;
  if (!(is >> p.utterance_id >> p.noise_id >> snr >> p.offset)) {
    throw Error(Errc::kFormat, "bad provenance line: " + line);
  }
  try {
    std::size_t used = 0;
    p.snr_db = std::stod(snr, &used);
    if (used != snr.size()) throw std::invalid_argument(snr);
  } catch (const std::exception&) {
    throw Error(Errc::kFormat, "bad SNR in provenance line: " + line);
  }
  return p;
}

void write_provenance(const std::filesystem::path& path,
                      const std::vector<Provenance>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  for (const auto& p : records) out << format_provenance(p) << '\n';
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

std::vector<Provenance> read_provenance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::vector<Provenance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_provenance(line));
  }
  return out;
}

std::map<std::string, std::filesystem::path> read_noise_manifest(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open noise manifest " + path.string());
  std::map<std::string, std::filesystem::path> entries;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string id, file;
    if (!(is >> id) || id[0] == '#') continue;
    if (!(is >> file)) {
      throw Error(Errc::kFormat, "noise manifest line without path: " + line);
    }
    std::filesystem::path p(file);
    if (p.is_relative()) p = path.parent_path() / p;
    if (!entries.emplace(id, p).second) {
      throw Error(Errc::kFormat, "duplicate noise id '" + id + "'");
    }
  }
  return entries;
}

NoiseRegistry load_noise_registry(
    const std::map<std::string, std::filesystem::path>& entries) {
  NoiseRegistry reg;
  for (const auto& [id, path] : entries) {
    Waveform w = read_wav(path);
    w.id = id;
    reg.emplace(id, std::move(w));
  }
  return reg;
}

}  // namespace sadkit::noise
