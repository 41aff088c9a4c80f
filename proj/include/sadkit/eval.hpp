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

namespace sadkit::eval {

struct Trial {
  std::string model_id;
  std::string test_id;
  bool is_target = false;
};

struct TrialSet {
  std::vector<Trial> trials;

  // Throws kFormat on a repeated (model_id, test_id) pair.
  void validate() const;
};

struct TrialScore {
  std::string model_id;
  std::string test_id;
  double score = 0.0;
  bool is_target = false;
};

struct TrialScoreSet {
  std::vector<TrialScore> records;
  std::uint64_t config_hash = 0;

  void validate() const;
};

struct DcfParams {
  double cost_fr = 1.0;
  double cost_fa = 10.0;
  double p_target = 0.1;

  void validate() const;
};

struct DetPoint {
  double threshold = 0.0;  // accept iff score >= threshold
  double p_fa = 0.0;
  double p_miss = 0.0;
};

// One point per distinct score (ascending), then a final +inf threshold that
// rejects everything. P_miss = #(target < t) / #target,
// P_fa = #(impostor >= t) / #impostor.
std::vector<DetPoint> det_points(const TrialScoreSet& scores);

// Among sweep points minimizing |P_miss - P_fa|, the smallest
// max(P_miss, P_fa). No interpolation between points.
double eer(const TrialScoreSet& scores);

double dcf(const DcfParams& params, double p_miss, double p_fa);

// Minimum detection cost over the sweep (unnormalized; never exceeds
// min(C_fr * p_t, C_fa * (1 - p_t))).
double min_dcf(const TrialScoreSet& scores, const DcfParams& params = {});

// Cohort scores for each test utterance.
using CohortScores = std::map<std::string, std::vector<double>>;

inline constexpr double kTnormStdFloor = 1e-6;

// (s - mean) / max(std, 1e-6) using the cohort scores of the trial's test
// segment (sample standard deviation).
TrialScoreSet tnorm(const TrialScoreSet& raw, const CohortScores& cohort);

CohortScores cohort_from_scores(const TrialScoreSet& cohort_trials);

struct MetricReport {
  double eer = 0.0;
  double min_dcf = 0.0;
  std::size_t targets = 0;
  std::size_t impostors = 0;
  DcfParams dcf;
  std::uint64_t config_hash = 0;
};

MetricReport evaluate(const TrialScoreSet& scores, const DcfParams& params);

// "key=value" lines.
std::string format_report(const MetricReport& report);

// Score file: optional "# config=<hex>" header, then
// "model_id test_id score target|nontarget".
void write_scores(const std::filesystem::path& path, const TrialScoreSet& scores);
TrialScoreSet read_scores(const std::filesystem::path& path);

// Trial list: "model_id test_id target|nontarget".
TrialSet read_trials(const std::filesystem::path& path);
void write_trials(const std::filesystem::path& path, const TrialSet& trials);

void write_det_csv(const std::filesystem::path& path,
                   const std::vector<DetPoint>& points);

}  // namespace sadkit::eval
