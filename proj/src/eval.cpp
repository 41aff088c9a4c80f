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


#include "sadkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sadkit/error.hpp"
#include "sadkit/hash.hpp"

namespace sadkit::eval {

namespace {

void split_classes(const TrialScoreSet& scores, std::vector<double>& targets,
                   std::vector<double>& impostors) {
  for (const auto& r : scores.records) {
    if (!std::isfinite(r.score)) {
      throw Error(Errc::kInvalidArgument,
                  "non-finite score for " + r.model_id + " / " + r.test_id);
    }
    (r.is_target ? targets : impostors).push_back(r.score);
  }
  if (targets.empty() || impostors.empty()) {
    throw Error(Errc::kInvalidArgument,
                "metrics need both target and impostor trials");
  }
  std::sort(targets.begin(), targets.end());
  std::sort(impostors.begin(), impostors.end());
}

bool parse_label(const std::string& label, const std::string& line) {
  if (label == "target") return true;
  if (label == "nontarget") return false;
  throw Error(Errc::kFormat, "expected target|nontarget in: " + line);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrialSet::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : trials) {
    if (!seen.emplace(t.model_id, t.test_id).second) {
      throw Error(Errc::kFormat,
                  "duplicate trial " + t.model_id + " / " + t.test_id);
    }
  }
}

void TrialScoreSet::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) {
      throw Error(Errc::kFormat, "non-finite score for " + r.model_id + " / " + r.test_id);
    }
    if (!seen.emplace(r.model_id, r.test_id).second) {
      throw Error(Errc::kFormat, "duplicate score record " + r.model_id + " / " + r.test_id);
    }
  }
}

void DcfParams::validate() const {
  if (!(cost_fr > 0.0) || !(cost_fa > 0.0) || !(p_target > 0.0 && p_target < 1.0)) {
    throw Error(Errc::kInvalidArgument, "DCF needs positive costs and 0 < p_target < 1");
  }
}

std::vector<DetPoint> det_points(const TrialScoreSet& scores) {
  std::vector<double> tgt, imp;
  split_classes(scores, tgt, imp);
  std::vector<double> thresholds;
  thresholds.reserve(tgt.size() + imp.size() + 1);
  std::merge(tgt.begin(), tgt.end(), imp.begin(), imp.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nt = static_cast<double>(tgt.size());
  const double ni = static_cast<double>(imp.size());
  std::vector<DetPoint> pts;
  pts.reserve(thresholds.size());
  std::size_t miss = 0, below_imp = 0;
  for (double t : thresholds) {
    while (miss < tgt.size() && tgt[miss] < t) ++miss;
    while (below_imp < imp.size() && imp[below_imp] < t) ++below_imp;
    pts.push_back({t, static_cast<double>(imp.size() - below_imp) / ni,
                   static_cast<double>(miss) / nt});
  }
  return pts;
}

double eer(const TrialScoreSet& scores) {
  const auto pts = det_points(scores);
  double best_gap = std::numeric_limits<double>::infinity();
  double best = 1.0;
  for (const auto& p : pts) {
    const double gap = std::abs(p.p_miss - p.p_fa);
    const double value = std::max(p.p_miss, p.p_fa);
    if (gap < best_gap || (gap == best_gap && value < best)) {
      best_gap = gap;
      best = value;
    }
  }
  return best;
}

double dcf(const DcfParams& params, double p_miss, double p_fa) {
  return params.cost_fr * p_miss * params.p_target +
         params.cost_fa * p_fa * (1.0 - params.p_target);
}

double min_dcf(const TrialScoreSet& scores, const DcfParams& params) {
  params.validate();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : det_points(scores)) {
    best = std::min(best, dcf(params, p.p_miss, p.p_fa));
  }
  return best;
}

CohortScores cohort_from_scores(const TrialScoreSet& cohort_trials) {
  CohortScores c;
  for (const auto& r : cohort_trials.records) c[r.test_id].push_back(r.score);
  return c;
}

TrialScoreSet tnorm(const TrialScoreSet& raw, const CohortScores& cohort) {
  std::map<std::string, std::pair<double, double>> stats;
  for (const auto& [test, values] : cohort) {
    if (values.size() < 2) {
      throw Error(Errc::kInvalidArgument,
                  "t-norm cohort for '" + test + "' has fewer than 2 scores");
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size() - 1);
    stats[test] = {mean, std::max(std::sqrt(var), kTnormStdFloor)};
  }
  TrialScoreSet out = raw;
  for (auto& r : out.records) {
    const auto it = stats.find(r.test_id);
    if (it == stats.end()) {
      throw Error(Errc::kNotFound, "no t-norm cohort scores for test '" + r.test_id + "'");
    }
    r.score = (r.score - it->second.first) / it->second.second;
  }
  return out;
}

MetricReport evaluate(const TrialScoreSet& scores, const DcfParams& params) {
  MetricReport r;
  r.eer = eer(scores);
  r.min_dcf = min_dcf(scores, params);
  for (const auto& s : scores.records) (s.is_target ? r.targets : r.impostors)++;
  r.dcf = params;
  r.config_hash = scores.config_hash;
  return r;
}

std::string format_report(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "config=%s\ntargets=%zu\nnontargets=%zu\neer=%.8f\n"
                "mindcf=%.8f\ncost_fr=%g\ncost_fa=%g\np_target=%g\n",
                hash_hex(r.config_hash).c_str(), r.targets, r.impostors, r.eer,
                r.min_dcf, r.dcf.cost_fr, r.dcf.cost_fa, r.dcf.p_target);
  return buf;
}

void write_scores(const std::filesystem::path& path, const TrialScoreSet& scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << "# config=" << hash_hex(scores.config_hash) << '\n';
  for (const auto& r : scores.records) {
    out << r.model_id << ' ' << r.test_id << ' ' << format_double(r.score) << ' '
        << (r.is_target ? "target" : "nontarget") << '\n';
  }
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

TrialScoreSet read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  TrialScoreSet s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("config=");
      if (pos != std::string::npos) s.config_hash = parse_hash_hex(line.substr(pos + 7, 16));
      continue;
    }
    std::istringstream is(line);
    TrialScore r;
    std::string score, label, extra;
    if (!(is >> r.model_id >> r.test_id >> score >> label) || (is >> extra)) {
      throw Error(Errc::kFormat, "bad score line: " + line);
    }
    try {
      std::size_t used = 0;
      r.score = std::stod(score, &used);
      if (used != score.size()) throw std::invalid_argument(score);
    } catch (const std::exception&) {
      throw Error(Errc::kFormat, "bad score value in: " + line);
    }
    r.is_target = parse_label(label, line);
    s.records.push_back(std::move(r));
  }
  s.validate();
  return s;
}

TrialSet read_trials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open trial list " + path.string());
  TrialSet t;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    Trial tr;
    std::string label;
    if (!(is >> tr.model_id) || tr.model_id[0] == '#') continue;
    if (!(is >> tr.test_id >> label)) {
      throw Error(Errc::kFormat, "bad trial line: " + line);
    }
    tr.is_target = parse_label(label, line);
    t.trials.push_back(std::move(tr));
  }
  t.validate();
  return t;
}

void write_trials(const std::filesystem::path& path, const TrialSet& trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  for (const auto& t : trials.trials) {
    out << t.model_id << ' ' << t.test_id << ' '
        << (t.is_target ? "target" : "nontarget") << '\n';
  }
}

void write_det_csv(const std::filesystem::path& path,
                   const std::vector<DetPoint>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << "threshold,p_fa,p_miss\n";
  for (const auto& p : points) {
    out << format_double(p.threshold) << ',' << format_double(p.p_fa) << ','
        << format_double(p.p_miss) << '\n';
  }
}

}  // namespace sadkit::eval
