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


// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Criteria 7 and 8 run the full pipeline on a synthetic
// corpus and take a few minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sadkit/error.hpp"
#include "sadkit/eval.hpp"
#include "sadkit/features.hpp"
#include "sadkit/gmm.hpp"
#include "sadkit/noise.hpp"
#include "sadkit/pipeline.hpp"
#include "sadkit/sad.hpp"
#include "synth.hpp"
#include "testing.hpp"

using namespace sadkit;
namespace pl = sadkit::pipeline;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    o.pass = false;
    o.detail += " (over time budget)";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d %s: %s  %s [%.1fs]\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome noise_mixing() {
  std::mt19937_64 rng(101);
  const double levels[] = {0.0, 10.0, 20.0};
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 4000 + rng() % 20000;
    const auto speech = testing::make_wave(testing::gaussian_noise(n, 0.005 + 0.05 * (rng() % 100) / 100.0, rng()));
    const auto nz = testing::make_wave(testing::gaussian_noise(n + rng() % 20000, 0.05 + (rng() % 100) / 100.0, rng()), "n");
    const double snr = levels[t % 3];
    const auto r = noise::mix_noise(speech, nz, {"n", snr, rng(), false});
    double ps = 0, pn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double added = r.scale * nz.samples[r.offset + i];
      ps += speech.samples[i] * speech.samples[i];
      pn += added * added;
    }
    worst = std::max(worst, std::abs(10.0 * std::log10(ps / pn) - snr));
  }
  return {worst < 1e-6, fmt("max |SNR error| = %.3g dB over 100 triples", worst)};
}

double weighted_density(double x, double w, double mu, double var) {
  return w * std::exp(-(x - mu) * (x - mu) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

Outcome bigaussian() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> e;
  for (int i = 0; i < 5000; ++i) e.push_back(-20.0 + g(rng));
  for (int i = 0; i < 5000; ++i) e.push_back(g(rng));
  const double theta = sad::fit_bigaussian(e).theta;
  const bool sym = std::abs(theta + 10.0) <= 0.5;

  const double w1 = 0.7, w2 = 0.3, mu1 = -20.0, mu2 = 0.0, v1 = 1.0, v2 = 4.0;
  const double th = sad::equal_density_threshold(w1, mu1, v1, w2, mu2, v2);
  double grid = std::numeric_limits<double>::quiet_NaN();
  double prev = weighted_density(mu1, w1, mu1, v1) - weighted_density(mu1, w2, mu2, v2);
  for (int i = 1; i <= 200000; ++i) {
    const double x = mu1 + i * 1e-4;
    const double d = weighted_density(x, w1, mu1, v1) - weighted_density(x, w2, mu2, v2);
    if ((prev > 0) != (d > 0)) grid = x - 0.5e-4;
    prev = d;
  }
  const double asym_err = std::abs(th - grid);

  std::bernoulli_distribution pick(0.4);
  std::vector<double> lab_e;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 10000; ++i) {
    const bool hi = pick(rng);
    labels.push_back(hi);
    lab_e.push_back((hi ? -5.0 : -35.0) + 2.0 * g(rng));
  }
  const auto mask = sad::sad_ubgme(lab_e);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += mask.decisions[i] != labels[i];
  const double err = static_cast<double>(wrong) / static_cast<double>(labels.size());

  char buf[200];
  std::snprintf(buf, sizeof buf, "symmetric theta = %.3f dB, asymmetric |theta - grid| = %.2g dB, labeling error = %.3f%%",
                theta, asym_err, 100.0 * err);
  return {sym && asym_err < 1e-3 && err < 0.01, buf};
}

gmm::GmmModel random_gmm(std::mt19937_64& rng, int m, int d) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::normal_distribution<double> g(0.0, 3.0);
  gmm::GmmModel model;
  model.weights.resize(m);
  model.means.resize(m, d);
  model.variances.resize(m, d);
  for (int i = 0; i < m; ++i) {
    model.weights(i) = u(rng);
    for (int j = 0; j < d; ++j) {
      model.means(i, j) = g(rng);
      model.variances(i, j) = u(rng) * 2.0;
    }
  }
  model.weights /= model.weights.sum();
  return model;
}

RowMatrix draw(const gmm::GmmModel& m, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(m.weights.data(), m.weights.data() + m.weights.size());
  std::normal_distribution<double> g(0.0, 1.0);
  RowMatrix out(n, m.dim());
  for (int t = 0; t < n; ++t) {
    const int c = pick(rng);
    for (int j = 0; j < m.dim(); ++j) out(t, j) = m.means(c, j) + std::sqrt(m.variances(c, j)) * g(rng);
  }
  return out;
}

Outcome em_guarantees() {
  std::mt19937_64 rng(303);
  double worst_drop = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int m = 1 + static_cast<int>(rng() % 6), d = 1 + static_cast<int>(rng() % 5);
    const RowMatrix data = draw(random_gmm(rng, m, d), 200 + static_cast<int>(rng() % 1500), rng());
    gmm::EmConfig cfg;
    cfg.rng_seed = rng();
    cfg.max_iters = 30;
    cfg.loglik_rel_tol = 1e-300;
    gmm::EmTrace trace;
    const int comps = 1 << (rng() % 4);
    gmm::em_train(gmm::split_vq_init(data, comps, cfg), data, cfg, &trace);
    for (std::size_t i = 1; i < trace.loglik.size(); ++i) {
      worst_drop = std::max(worst_drop, trace.loglik[i - 1] - trace.loglik[i]);
    }
  }

  gmm::GmmModel truth;
  truth.weights = Eigen::Vector2d(0.4, 0.6);
  truth.means.resize(2, 3);
  truth.means << -3.0, 1.0, 0.5, 3.0, -1.0, 2.0;
  truth.variances = RowMatrix::Ones(2, 3);
  const RowMatrix data = draw(truth, 20000, 304);
  gmm::EmConfig cfg;
  cfg.rng_seed = 5;
  const gmm::GmmModel fit = gmm::train_ubm(data, 2, cfg);
  const int first = fit.means(0, 0) < fit.means(1, 0) ? 0 : 1;
  double mean_err = 0.0;
  for (int c = 0; c < 2; ++c) {
    const int f = c == 0 ? first : 1 - first;
    mean_err = std::max(mean_err, (fit.means.row(f) - truth.means.row(c)).cwiseAbs().maxCoeff());
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "largest log-likelihood drop = %.3g over 50 datasets, mean recovery error = %.4f",
                worst_drop, mean_err);
  return {worst_drop <= 1e-8 && mean_err < 0.05, buf};
}

std::vector<double> row(const RowMatrix& m, Eigen::Index r) {
  return {m.row(r).data(), m.row(r).data() + m.cols()};
}

Outcome map_algebra() {
  std::mt19937_64 rng(404);
  const gmm::GmmModel ubm = random_gmm(rng, 16, 4);
  const RowMatrix data = draw(random_gmm(rng, 3, 4), 500, 405);
  const gmm::GmmModel adapted = gmm::map_adapt(ubm, data, {14.0});

  // alpha = n / (n + 14) applied to the posterior-weighted data mean
  Eigen::VectorXd n = Eigen::VectorXd::Zero(16);
  RowMatrix first = RowMatrix::Zero(16, 4);
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    const auto lp = gmm::component_log_densities(ubm, row(data, t));
    const double total = gmm::loglik(ubm, row(data, t));
    for (int m = 0; m < 16; ++m) {
      const double g = std::exp(lp[static_cast<std::size_t>(m)] - total);
      n(m) += g;
      first.row(m) += g * data.row(t);
    }
  }
  double convex_err = 0.0;
  bool between = true;
  for (int m = 0; m < 16; ++m) {
    const double alpha = n(m) / (n(m) + 14.0);
    for (int j = 0; j < 4; ++j) {
      const double ex = n(m) > 0 ? first(m, j) / n(m) : ubm.means(m, j);
      const double expect = alpha * ex + (1.0 - alpha) * ubm.means(m, j);
      convex_err = std::max(convex_err, std::abs(adapted.means(m, j) - expect) / std::max(1.0, std::abs(expect)));
      between &= adapted.means(m, j) >= std::min(ex, ubm.means(m, j)) - 1e-12 &&
                 adapted.means(m, j) <= std::max(ex, ubm.means(m, j)) + 1e-12;
    }
  }
  const gmm::GmmModel stiff = gmm::map_adapt(ubm, data, {1e12});
  const double stiff_err = (stiff.means - ubm.means).cwiseAbs().maxCoeff();
  const double self_llr = gmm::topc_llr(ubm, ubm, data, 5);
  const bool shared = adapted.weights == ubm.weights && adapted.variances == ubm.variances;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "convexity error = %.2g, r=1e12 deviation = %.2g, LLR(UBM,UBM) = %g, weights/variances copied = %s",
                convex_err, stiff_err, self_llr, shared ? "yes" : "no");
  return {convex_err < 1e-12 && between && stiff_err < 1e-9 && self_llr == 0.0 && shared, buf};
}

eval::TrialScoreSet random_scores(std::mt19937_64& rng, int max_n) {
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 4 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_n - 3));
  const int nt = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 2));
  const double sep = 3.0 * (rng() % 100) / 100.0;
  const bool ties = rng() % 2 == 0;
  eval::TrialScoreSet s;
  for (int i = 0; i < n; ++i) {
    const bool tgt = i < nt;
    double v = g(rng) + (tgt ? sep : 0.0);
    if (ties) v = std::round(v * 2.0) / 2.0;
    s.records.push_back({"m", "t" + std::to_string(i), v, tgt});
  }
  return s;
}

std::pair<double, double> brute_force(const eval::TrialScoreSet& s, const eval::DcfParams& p) {
  std::set<double> distinct;
  for (const auto& r : s.records) distinct.insert(r.score);
  std::vector<double> th(distinct.begin(), distinct.end());
  th.push_back(std::numeric_limits<double>::infinity());
  double best_gap = 2.0, best_eer = 2.0, best_dcf = std::numeric_limits<double>::infinity();
  for (double t : th) {
    double miss = 0, fa = 0, nt = 0, ni = 0;
    for (const auto& r : s.records) {
      if (r.is_target) {
        ++nt;
        miss += r.score < t;
      } else {
        ++ni;
        fa += r.score >= t;
      }
    }
    const double pm = miss / nt, pf = fa / ni;
    const double gap = std::abs(pm - pf), m = std::max(pm, pf);
    if (gap < best_gap) {
      best_gap = gap;
      best_eer = m;
    } else if (gap == best_gap) {
      best_eer = std::min(best_eer, m);
    }
    best_dcf = std::min(best_dcf, p.cost_fr * p.p_target * pm + p.cost_fa * (1.0 - p.p_target) * pf);
  }
  return {best_eer, best_dcf};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(505);
  const eval::DcfParams p;
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_scores(rng, 200);
    const auto [e, d] = brute_force(s, p);
    mismatches += eval::eer(s) != e;
    mismatches += eval::min_dcf(s, p) != d;
  }
  int variant = 0;
  for (int t = 0; t < 20; ++t) {
    const auto s = random_scores(rng, 200);
    const double a = 0.1 + (rng() % 100) / 10.0, b = -5.0 + (rng() % 100) / 10.0;
    auto u = s;
    for (auto& r : u.records) {
      switch (t % 4) {
        case 0: r.score = a * r.score + b; break;
        case 1: r.score = std::exp(r.score); break;
        case 2: r.score = std::atan(r.score) + r.score * r.score * r.score; break;
        default: r.score = std::cbrt(r.score) * a; break;
      }
    }
    variant += eval::eer(s) != eval::eer(u);
    variant += eval::min_dcf(s, p) != eval::min_dcf(u, p);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d mismatches vs brute force on 100 sets, %d changes under 20 monotone maps",
                mismatches, variant);
  return {mismatches == 0 && variant == 0, buf};
}

Outcome mindcf_bound() {
  std::mt19937_64 rng(606);
  const eval::DcfParams p;
  double worst = 0.0;
  for (int t = 0; t < 2000; ++t) {
    auto s = random_scores(rng, 300);
    if (t % 5 == 0) {
      // inverted: targets below impostors
      for (auto& r : s.records) r.score = r.is_target ? -std::abs(r.score) - 10 : std::abs(r.score);
    }
    worst = std::max(worst, eval::min_dcf(s, p));
  }
  return {worst <= 0.1, fmt("largest minDCF over 2000 score sets = %.6f (bound 0.1)", worst)};
}

// ---------------------------------------------------------------------------

struct PipelineRun {
  eval::MetricReport report;
  std::filesystem::path scores, report_file;
};

PipelineRun run_pipeline(const pl::Manifest& m, pl::ExperimentConfig cfg, pl::SadMethod method,
                         const std::filesystem::path& out) {
  cfg.sad_method = method;
  pl::run_extract(m, cfg, out / "feat");
  pl::run_train_ubm(m, cfg, out / "feat", out / "ubm.gmm");
  pl::run_adapt(m, cfg, out / "feat", out / "ubm.gmm", out / "models");
  pl::run_score(m, cfg, out / "feat", out / "ubm.gmm", out / "models", out / "scores.txt");
  PipelineRun r;
  r.scores = out / "scores.txt";
  r.report_file = out / "report.txt";
  r.report = pl::run_eval(r.scores, cfg.dcf, r.report_file, out / "det.csv");
  return r;
}

pl::ExperimentConfig corpus_config() {
  pl::ExperimentConfig cfg;
  cfg.mixtures = 32;
  cfg.seed = 1;
  cfg.jobs = 1;
  cfg.noise = pl::NoiseSettings{};
  cfg.noise->noise_id = "white";
  cfg.noise->snr_db = 10.0;
  return cfg;
}

struct Corpus {
  testing::TempDir dir{"acceptance"};
  testing::CorpusFiles files;
  pl::Manifest noisy;
  PipelineRun ubgme;
};

Outcome sad_ordering(Corpus& c) {
  c.files = testing::write_corpus(c.dir.path(), testing::CorpusSpec{});
  const pl::ExperimentConfig cfg = corpus_config();
  const pl::MixSummary mixed = pl::run_mix(pl::load_manifest(c.files.manifest), cfg, c.dir / "noisy");
  c.noisy = pl::load_manifest(mixed.manifest);

  const PipelineRun none = run_pipeline(c.noisy, cfg, pl::SadMethod::kNone, c.dir / "none");
  std::string detail = fmt("none=%.4f", none.report.eer);
  bool ok = none.report.eer < 0.5;
  for (auto method : {pl::SadMethod::kAebts, pl::SadMethod::kMebts, pl::SadMethod::kUbgme,
                      pl::SadMethod::kSmsad, pl::SadMethod::kG729b}) {
    const std::string name(pl::sad_method_name(method));
    const PipelineRun r = run_pipeline(c.noisy, cfg, method, c.dir / name);
    if (method == pl::SadMethod::kUbgme) c.ubgme = r;
    const bool better = r.report.eer < none.report.eer && r.report.eer < 0.5;
    ok &= better;
    detail += " " + name + fmt("=%.4f", r.report.eer) + (better ? "" : "(!)");
  }
  return {ok, "EER: " + detail};
}

Outcome determinism(Corpus& c) {
  if (c.ubgme.scores.empty()) return {false, "first run unavailable"};
  // second run from scratch, including the noise mixing
  const pl::ExperimentConfig cfg = corpus_config();
  const pl::MixSummary mixed = pl::run_mix(pl::load_manifest(c.files.manifest), cfg, c.dir / "noisy2");
  const pl::Manifest again = pl::load_manifest(mixed.manifest);
  const PipelineRun r = run_pipeline(again, cfg, pl::SadMethod::kUbgme, c.dir / "rerun");
  const bool scores = testing::slurp(r.scores) == testing::slurp(c.ubgme.scores);
  const bool report = testing::slurp(r.report_file) == testing::slurp(c.ubgme.report_file);
  const bool audio = testing::slurp(mixed.provenance) == testing::slurp(c.dir / "noisy" / "provenance.txt");
  return {scores && report && audio,
          std::string("scores ") + (scores ? "identical" : "differ") + ", report " +
              (report ? "identical" : "differ") + ", noise provenance " + (audio ? "identical" : "differ")};
}

Outcome feature_dim() {
  const pl::ExperimentConfig cfg;
  const auto f = features::compute_features(testing::make_wave(testing::gaussian_noise(8000, 0.1, 9)),
                                            cfg.framing, cfg.mfcc);
  return {f.dim() == 38, "default MFCC+delta dimension = " + std::to_string(f.dim())};
}

}  // namespace

int main() {
  report(1, "noise-mixing exactness", 5.0, noise_mixing);
  report(2, "bi-Gaussian threshold", 10.0, bigaussian);
  report(3, "EM guarantees", 60.0, em_guarantees);
  report(4, "MAP algebra", 0.0, map_algebra);
  report(5, "metric oracle equivalence", 30.0, metric_oracle);
  report(6, "minDCF bound", 0.0, mindcf_bound);
  Corpus corpus;
  report(7, "detector ordering", 600.0, [&] { return sad_ordering(corpus); });
  report(8, "determinism", 0.0, [&] { return determinism(corpus); });
  report(9, "feature dimension", 0.0, feature_dim);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
