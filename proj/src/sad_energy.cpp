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
#include <fstream>
#include <numeric>
#include <sstream>

#include "sadkit/error.hpp"
#include "sadkit/hash.hpp"
#include "sadkit/sad.hpp"

namespace sadkit::sad {

std::size_t SpeechMask::speech_frames() const {
  return static_cast<std::size_t>(
      std::count(decisions.begin(), decisions.end(), std::uint8_t{1}));
}

SpeechMask sad_aebts(std::span<const double> energies, double factor) {
  if (energies.empty()) {
    throw Error(Errc::kTooShort, "energy detector needs at least one frame");
  }
  const double mean = std::accumulate(energies.begin(), energies.end(), 0.0) /
                      static_cast<double>(energies.size());
  const double threshold = factor * mean;
  SpeechMask m;
  m.decisions.reserve(energies.size());
  for (double e : energies) m.decisions.push_back(e > threshold ? 1 : 0);
  return m;
}

SpeechMask sad_mebts(std::span<const double> energies_db, double margin_db) {
  if (energies_db.empty()) {
    throw Error(Errc::kTooShort, "energy detector needs at least one frame");
  }
  const double threshold =
      *std::max_element(energies_db.begin(), energies_db.end()) - margin_db;
  SpeechMask m;
  m.decisions.reserve(energies_db.size());
  for (double e : energies_db) m.decisions.push_back(e >= threshold ? 1 : 0);
  return m;
}

std::vector<std::uint8_t> smooth_runs(std::vector<std::uint8_t> d,
                                      int min_burst, int silence_before,
                                      int hangover) {
  const std::size_t n = d.size();
  // Burst deletion on the incoming runs.
  std::size_t i = 0;
  std::size_t silence = static_cast<std::size_t>(std::max(silence_before, 0));
  std::size_t quiet = 0;
  while (i < n) {
    if (!d[i]) {
      ++quiet;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && d[j]) ++j;
    if (j - i < static_cast<std::size_t>(std::max(min_burst, 0)) &&
        quiet >= silence) {
      std::fill(d.begin() + static_cast<std::ptrdiff_t>(i),
                d.begin() + static_cast<std::ptrdiff_t>(j), std::uint8_t{0});
      quiet += j - i;
    } else {
      quiet = 0;
    }
    i = j;
  }
  // Hangover.
  std::vector<std::uint8_t> out(d);
  int remaining = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (d[t]) {
      remaining = hangover;
    } else if (remaining > 0) {
      out[t] = 1;
      --remaining;
    }
  }
  return out;
}

RowMatrix apply_mask(const RowMatrix& rows, const SpeechMask& mask) {
  if (static_cast<std::size_t>(rows.rows()) != mask.size()) {
    throw Error(Errc::kLengthMismatch,
                "mask for '" + mask.source_id + "' has " +
                    std::to_string(mask.size()) + " frames, matrix has " +
                    std::to_string(rows.rows()));
  }
  RowMatrix out(static_cast<Eigen::Index>(mask.speech_frames()), rows.cols());
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.decisions[i]) out.row(k++) = rows.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::string format_mask(const SpeechMask& mask) {
  std::string line = mask.source_id;
  std::size_t i = 0;
  while (i < mask.decisions.size()) {
    std::size_t j = i;
    while (j < mask.decisions.size() && mask.decisions[j] == mask.decisions[i]) ++j;
    line += ' ';
    line += mask.decisions[i] ? '1' : '0';
    line += 'x';
    line += std::to_string(j - i);
    i = j;
  }
  return line;
}

SpeechMask parse_mask(const std::string& line) {
  std::istringstream is(line);
  SpeechMask m;
  if (!(is >> m.source_id)) {
    throw Error(Errc::kFormat, "empty mask line");
  }
  std::string run;
  while (is >> run) {
    if (run.size() < 3 || (run[0] != '0' && run[0] != '1') || run[1] != 'x') {
      throw Error(Errc::kFormat, "bad mask run '" + run + "' for " + m.source_id);
    }
    std::size_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoul(run.substr(2), &used);
      if (used != run.size() - 2 || count == 0) throw std::invalid_argument(run);
    } catch (const std::exception&) {
      throw Error(Errc::kFormat, "bad mask run '" + run + "' for " + m.source_id);
    }
    m.decisions.insert(m.decisions.end(), count,
                       static_cast<std::uint8_t>(run[0] - '0'));
  }
  return m;
}

void write_mask_file(const std::filesystem::path& path, const MaskFile& file) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << "# config=" << hash_hex(file.config_hash) << '\n';
  for (const auto& m : file.masks) out << format_mask(m) << '\n';
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

MaskFile read_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  MaskFile f;
  std::string line;
  bool have_hash = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("config=");
      if (pos != std::string::npos) {
        f.config_hash = parse_hash_hex(line.substr(pos + 7, 16));
        have_hash = true;
      }
      continue;
    }
    f.masks.push_back(parse_mask(line));
  }
  if (!have_hash) {
    throw Error(Errc::kFormat, path.string() + ": missing config hash header");
  }
  return f;
}

}  // namespace sadkit::sad
