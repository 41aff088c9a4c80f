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


#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "sadkit/error.hpp"
#include "sadkit/pipeline.hpp"
#include "synth.hpp"
#include "testing.hpp"

using namespace sadkit;
namespace pl = sadkit::pipeline;
using nlohmann::json;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kInvalidArgument;
}

testing::CorpusSpec small_spec() {
  testing::CorpusSpec spec;
  spec.targets = 4;
  spec.background = 4;
  spec.cohort = 2;
  spec.tests_per_target = 2;
  spec.ubm_utts_per_speaker = 1;
  spec.train_seconds = 4.0;
  spec.test_seconds = 2.0;
  spec.ubm_seconds = 4.0;
  spec.noise_seconds = 6.0;
  spec.seed = 3;
  return spec;
}

// Built once and shared; tests write their outputs to their own subdirectories.
const testing::CorpusFiles& corpus() {
  static testing::TempDir dir;
  static const testing::CorpusFiles files = testing::write_corpus(dir.path(), small_spec());
  return files;
}

pl::ExperimentConfig small_config() {
  pl::ExperimentConfig cfg;
  cfg.mixtures = 8;
  cfg.seed = 11;
  return cfg;
}

struct ChainOutput {
  eval::TrialScoreSet scores;
  eval::MetricReport report;
};

ChainOutput run_chain(const pl::Manifest& m, const pl::ExperimentConfig& cfg,
                      const std::filesystem::path& out) {
  pl::run_extract(m, cfg, out / "feat");
  pl::run_train_ubm(m, cfg, out / "feat", out / "ubm.gmm");
  pl::run_adapt(m, cfg, out / "feat", out / "ubm.gmm", out / "models");
  ChainOutput r;
  r.scores = pl::run_score(m, cfg, out / "feat", out / "ubm.gmm", out / "models", out / "scores.txt");
  r.report = pl::run_eval(out / "scores.txt", cfg.dcf, out / "report.txt", out / "det.csv");
  return r;
}

void write_json(const std::filesystem::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("method and role names") {
  CHECK(pl::parse_sad_method("G.729B") == pl::SadMethod::kG729b);
  CHECK(pl::parse_sad_method("UBGME") == pl::SadMethod::kUbgme);
  for (auto m : {pl::SadMethod::kNone, pl::SadMethod::kG729b, pl::SadMethod::kSmsad, pl::SadMethod::kMebts,
                 pl::SadMethod::kAebts, pl::SadMethod::kUbgme}) {
    CHECK(pl::parse_sad_method(pl::sad_method_name(m)) == m);
  }
  CHECK_THROWS_AS(pl::parse_sad_method("vad"), Error);
  CHECK(pl::parse_role("cohort") == pl::Role::kCohort);
  CHECK_THROWS_AS(pl::parse_role("judge"), Error);
}

TEST_CASE("manifest loading and validation") {
  const pl::Manifest m = pl::load_manifest(corpus().manifest);
  const auto spec = small_spec();
  CHECK(m.select({pl::Role::kTrain}).size() == static_cast<std::size_t>(spec.targets));
  CHECK(m.select({pl::Role::kTest}).size() == static_cast<std::size_t>(spec.targets * spec.tests_per_target));
  CHECK(m.noises.count("white") == 1);
  CHECK(std::filesystem::exists(m.find(m.utterances.front().id).path));
  CHECK(code_of([&] { m.find("nobody"); }) == Errc::kNotFound);
  for (const auto& u : m.select({pl::Role::kTrain}, "f")) CHECK(u.gender == "f");

  testing::TempDir dir;
  json j = json::parse(testing::slurp(corpus().manifest));
  // paths in the copy must stay valid from another directory
  for (auto& u : j["utterances"]) u["path"] = (corpus().manifest.parent_path() / u["path"].get<std::string>()).string();
  j["noises"] = json::object({{"white", corpus().noise.string()}});
  j["trials"] = corpus().trials.string();
  write_json(dir / "ok.json", j);
  CHECK(pl::load_manifest(dir / "ok.json").utterances.size() == m.utterances.size());

  json dup = j;
  dup["utterances"].push_back(dup["utterances"][0]);
  write_json(dir / "dup.json", dup);
  CHECK(code_of([&] { pl::load_manifest(dir / "dup.json"); }) == Errc::kFormat);

  json missing = j;
  missing["utterances"][0]["path"] = "nowhere.wav";
  write_json(dir / "missing.json", missing);
  CHECK_THROWS_AS(pl::load_manifest(dir / "missing.json"), Error);
  CHECK_NOTHROW(pl::load_manifest(dir / "missing.json", false));

  json badrole = j;
  badrole["utterances"][0]["role"] = "judge";
  write_json(dir / "badrole.json", badrole);
  CHECK_THROWS_AS(pl::load_manifest(dir / "badrole.json"), Error);

  // write and reload gives the same content hash
  pl::write_manifest(dir / "copy.json", m);
  CHECK(pl::manifest_hash(pl::load_manifest(dir / "copy.json")) == pl::manifest_hash(m));
}

TEST_CASE("config defaults, overrides and validation") {
  const pl::ExperimentConfig d = pl::config_from_json(json::object());
  CHECK(d.mixtures == 256);
  CHECK(d.map.relevance_factor == 14.0);
  CHECK(d.top_c == 5);
  CHECK(d.mfcc.n_mel_filters == 20);
  CHECK(d.framing.frame_len_ms == 20.0);
  CHECK(d.framing.hop_ms == 10.0);
  CHECK(d.dcf.cost_fa == 10.0);
  CHECK(d.dcf.p_target == 0.1);
  CHECK(d.aebts_factor == 0.06);

  // round trip
  CHECK(pl::config_to_json(pl::config_from_json(pl::config_to_json(d))) == pl::config_to_json(d));

  json j = json::object();
  pl::apply_override(j, "gmm.mixtures=64");
  pl::apply_override(j, "sad.method=\"aebts\"");
  pl::apply_override(j, "sad.method=mebts");  // bare strings are accepted
  const auto c = pl::config_from_json(j);
  CHECK(c.mixtures == 64);
  CHECK(c.sad_method == pl::SadMethod::kMebts);

  // file < --set
  testing::TempDir dir;
  write_json(dir / "c.json", json{{"gmm", {{"mixtures", 16}}}, {"seed", 5}});
  json layered = pl::config_to_json(pl::load_config(dir / "c.json"));
  CHECK(layered["seed"] == 5);
  pl::apply_override(layered, "gmm.mixtures=32");
  CHECK(pl::config_from_json(layered).mixtures == 32);
  CHECK(pl::config_from_json(layered).seed == 5);

  CHECK_THROWS_AS(pl::config_from_json(json{{"gmm", {{"mixturez", 4}}}}), Error);
  CHECK_THROWS_AS(pl::config_from_json(json{{"colour", 1}}), Error);
  CHECK_THROWS_AS(pl::config_from_json(json{{"gmm", {{"mixtures", 12}}}}), Error);
  CHECK_THROWS_AS(pl::config_from_json(json{{"scoring", {{"top_c", 0}}}}), Error);
  CHECK_THROWS_AS(pl::apply_override(j, "nokey"), Error);
  write_json(dir / "bad.json", json{{"gmm", "x"}});
  CHECK_THROWS_AS(pl::load_config(dir / "bad.json"), Error);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(pl::load_config(dir / "broken.json"), Error);
}

TEST_CASE("stage hashes follow the dependency chain") {
  const pl::ExperimentConfig base;
  const auto h = pl::stage_hashes(base);

  auto jobs = base;
  jobs.jobs = 8;
  const auto hj = pl::stage_hashes(jobs);
  CHECK(hj.scores == h.scores);

  auto sad = base;
  sad.sad_method = pl::SadMethod::kAebts;
  const auto hs = pl::stage_hashes(sad);
  CHECK(hs.sad != h.sad);
  CHECK(hs.features != h.features);
  CHECK(hs.scores != h.scores);

  auto map = base;
  map.map.relevance_factor = 16.0;
  const auto hm = pl::stage_hashes(map);
  CHECK(hm.ubm == h.ubm);
  CHECK(hm.features == h.features);
  CHECK(hm.models != h.models);
  CHECK(hm.scores != h.scores);

  auto score = base;
  score.top_c = 3;
  const auto hc = pl::stage_hashes(score);
  CHECK(hc.models == h.models);
  CHECK(hc.scores != h.scores);
}

TEST_CASE("SAD stage") {
  const pl::Manifest m = pl::load_manifest(corpus().manifest);
  const auto utts = m.select({pl::Role::kTest});
  testing::TempDir dir;
  auto cfg = small_config();

  cfg.sad_method = pl::SadMethod::kNone;
  const pl::SadSummary none = pl::run_sad(utts, cfg, dir / "none.txt");
  CHECK(none.speech_frames == none.frames);
  const sad::MaskFile nf = sad::read_mask_file(dir / "none.txt");
  CHECK(nf.config_hash == pl::stage_hashes(cfg).sad);
  REQUIRE(nf.masks.size() == utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const Waveform w = read_wav(utts[i].path);
    CHECK(nf.masks[i].source_id == utts[i].id);
    CHECK(nf.masks[i].size() == frame_count(w.samples.size(), 160, 80));
  }

  for (auto method : {pl::SadMethod::kAebts, pl::SadMethod::kMebts, pl::SadMethod::kUbgme,
                      pl::SadMethod::kSmsad, pl::SadMethod::kG729b}) {
    cfg.sad_method = method;
    const auto a = pl::run_sad(utts, cfg, dir / "a.txt");
    cfg.jobs = 3;
    const auto b = pl::run_sad(utts, cfg, dir / "b.txt");
    cfg.jobs = 1;
    CHECK(a.speech_frames == b.speech_frames);
    CHECK(a.speech_frames < a.frames);
    CHECK(a.speech_frames > 0);
    CHECK(testing::slurp(dir / "a.txt") == testing::slurp(dir / "b.txt"));
  }
}

TEST_CASE("UBGME keeps the high-energy share of a two-level signal") {
  // blocks of loud and quiet noise; a frame is loud if it touches a loud block
  std::mt19937_64 rng(12);
  std::vector<double> x;
  std::vector<std::uint8_t> loud;
  while (x.size() < 8000 * 30) {
    const bool hi = rng() % 10 < 3;
    const auto block = testing::gaussian_noise(800, hi ? 0.1 : 0.001, rng());
    x.insert(x.end(), block.begin(), block.end());
    loud.insert(loud.end(), block.size(), hi);
  }
  const std::size_t frames = frame_count(x.size(), 160, 80);
  std::size_t expect = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    bool any = false;
    for (std::size_t i = f * 80; i < f * 80 + 160; ++i) any |= loud[i] == 1;
    expect += any;
  }
  pl::ExperimentConfig cfg;
  cfg.sad_method = pl::SadMethod::kUbgme;
  const sad::SpeechMask m = pl::compute_mask(testing::make_wave(x, "two-level"), cfg);
  const double got = static_cast<double>(m.speech_frames()) / static_cast<double>(frames);
  CHECK(std::abs(got - static_cast<double>(expect) / static_cast<double>(frames)) < 0.02);
}

TEST_CASE("an empty mask falls back to every frame") {
  pl::ExperimentConfig cfg;
  cfg.sad_method = pl::SadMethod::kAebts;
  const auto u = pl::compute_utterance_features(testing::make_wave(std::vector<double>(4000, 0.0)), cfg);
  CHECK(u.fell_back);
  CHECK(static_cast<std::size_t>(u.features.frames()) == frame_count(4000, 160, 80));
  CHECK(u.features.dim() == 38);
}

TEST_CASE("fixed-mode mixing") {
  const pl::Manifest m = pl::load_manifest(corpus().manifest);
  testing::TempDir dir;
  auto cfg = small_config();
  cfg.noise = pl::NoiseSettings{};
  cfg.noise->noise_id = "white";
  cfg.noise->snr_db = 10.0;
  const pl::MixSummary s = pl::run_mix(m, cfg, dir / "noisy");
  const auto tests = m.select({pl::Role::kTest});
  REQUIRE(s.records.size() == tests.size());
  for (const auto& r : s.records) {
    CHECK(r.noise_id == "white");
    CHECK(r.snr_db == 10.0);
  }
  const auto prov = noise::read_provenance(s.provenance);
  CHECK(prov.size() == s.records.size());

  // the mixed manifest points at new audio for test segments only
  const pl::Manifest mixed = pl::load_manifest(s.manifest);
  const Waveform noise_wave = read_wav(corpus().noise);
  for (const auto& r : s.records) {
    const auto& orig = m.find(r.utterance_id);
    const auto& now = mixed.find(r.utterance_id);
    CHECK(now.path != orig.path);
    // replaying the recorded offset gives the stored audio up to 16-bit rounding
    const auto replay = noise::mix_at_offset(read_wav(orig.path), noise_wave, r.snr_db, r.offset, false);
    const Waveform stored = read_wav(now.path);
    REQUIRE(stored.samples.size() == replay.mixed.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < stored.samples.size(); ++i) {
      worst = std::max(worst, std::abs(stored.samples[i] - replay.mixed.samples[i]));
    }
    CHECK(worst <= 1.0 / 32768.0 + 1e-12);
  }
  for (const auto& u : m.select({pl::Role::kTrain})) CHECK(mixed.find(u.id).path == u.path);

  auto again = cfg;
  const pl::MixSummary s2 = pl::run_mix(m, again, dir / "noisy2");
  CHECK(testing::slurp(s.provenance) == testing::slurp(s2.provenance));

  cfg.noise->noise_id = "pink";
  CHECK(code_of([&] { pl::run_mix(m, cfg, dir / "bad"); }) == Errc::kNotFound);
}

TEST_CASE("policy-mode mixing replays its draws") {
  pl::Manifest m = pl::load_manifest(corpus().manifest);
  testing::TempDir dir;
  // second noise type: low-passed noise
  auto raw = testing::gaussian_noise(8000 * 6, 0.1, 77);
  for (std::size_t i = 1; i < raw.size(); ++i) raw[i] = 0.9 * raw[i - 1] + 0.1 * raw[i];
  write_wav(dir / "rumble.wav", testing::make_wave(raw, "rumble"));
  m.noises["rumble"] = dir / "rumble.wav";

  auto cfg = small_config();
  cfg.noise = pl::NoiseSettings{};
  cfg.noise->mode = pl::NoiseSettings::Mode::kPolicy;
  cfg.noise->pool = {"white", "rumble"};
  cfg.noise->snr_lo_db = 0.0;
  cfg.noise->snr_hi_db = 20.0;
  const pl::MixSummary s = pl::run_mix(m, cfg, dir / "noisy");
  const noise::DistortionPolicy policy{cfg.noise->pool, 0.0, 20.0, cfg.seed, false};
  std::set<std::string> used;
  for (const auto& r : s.records) {
    const noise::Draw d = noise::draw_distortion(r.utterance_id, policy);
    CHECK(d.noise_id == r.noise_id);
    CHECK(d.snr_db == r.snr_db);
    CHECK(r.snr_db >= 0.0);
    CHECK(r.snr_db <= 20.0);
    used.insert(r.noise_id);
  }
  CHECK(used.size() == 2);
}

TEST_CASE("full chain on a small corpus") {
  const pl::Manifest m = pl::load_manifest(corpus().manifest);
  testing::TempDir dir;
  auto cfg = small_config();
  const ChainOutput a = run_chain(m, cfg, dir / "a");
  const auto spec = small_spec();
  CHECK(a.scores.records.size() == static_cast<std::size_t>(spec.targets * spec.targets * spec.tests_per_target));
  CHECK(a.report.eer < 0.5);
  CHECK(a.report.min_dcf <= 0.1);
  CHECK(a.scores.config_hash == pl::stage_hashes(cfg).scores);
  CHECK(std::filesystem::exists(dir / "a" / "det.csv"));
  // every enrolled speaker has a model file
  for (const auto& u : m.select({pl::Role::kTrain})) {
    CHECK(std::filesystem::exists(dir / "a" / "models" / (u.speaker + ".gmm")));
  }

  SUBCASE("repeatable, including across thread counts") {
    auto threaded = cfg;
    threaded.jobs = 3;
    run_chain(m, threaded, dir / "b");
    CHECK(testing::slurp(dir / "a" / "scores.txt") == testing::slurp(dir / "b" / "scores.txt"));
    CHECK(testing::slurp(dir / "a" / "report.txt") == testing::slurp(dir / "b" / "report.txt"));
    // re-evaluating gives the same report
    pl::run_eval(dir / "a" / "scores.txt", cfg.dcf, dir / "a" / "report2.txt", {});
    CHECK(testing::slurp(dir / "a" / "report.txt") == testing::slurp(dir / "a" / "report2.txt"));
  }

  SUBCASE("stale artifacts are rejected") {
    auto other = cfg;
    other.sad_method = pl::SadMethod::kAebts;
    CHECK(code_of([&] { pl::run_train_ubm(m, other, dir / "a" / "feat", dir / "x.gmm"); }) ==
          Errc::kStaleArtifact);
    auto more = cfg;
    more.mixtures = 16;
    CHECK(code_of([&] {
            pl::run_adapt(m, more, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "x");
          }) == Errc::kStaleArtifact);
    auto relevance = cfg;
    relevance.map.relevance_factor = 4.0;
    CHECK(code_of([&] {
            pl::run_score(m, relevance, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "a" / "models",
                          dir / "x.txt");
          }) == Errc::kStaleArtifact);
    CHECK(code_of([&] {
            pl::run_score(m, cfg, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "nomodels",
                          dir / "x.txt");
          }) == Errc::kNotFound);
    // cohort scores from another configuration
    pl::run_adapt(m, relevance, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "c", {pl::Role::kCohort});
    pl::run_cohort_score(m, relevance, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "c", dir / "c.txt");
    CHECK(code_of([&] { pl::run_tnorm(dir / "a" / "scores.txt", dir / "c.txt", dir / "t.txt"); }) ==
          Errc::kStaleArtifact);
  }

  SUBCASE("t-norm with matching cohort scores") {
    pl::run_adapt(m, cfg, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "c", {pl::Role::kCohort});
    const auto coh =
        pl::run_cohort_score(m, cfg, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "c", dir / "c.txt");
    CHECK(coh.records.size() == static_cast<std::size_t>(spec.cohort * spec.targets * spec.tests_per_target));
    const auto t = pl::run_tnorm(dir / "a" / "scores.txt", dir / "c.txt", dir / "t.txt");
    CHECK(t.records.size() == a.scores.records.size());
    CHECK(t.config_hash != a.scores.config_hash);
    CHECK(pl::run_eval(dir / "t.txt", cfg.dcf, {}, {}).eer < 0.5);
  }

  SUBCASE("an enormous relevance factor reproduces the UBM") {
    auto stiff = cfg;
    stiff.map.relevance_factor = 1e12;
    pl::run_adapt(m, stiff, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "stiff");
    const auto s = pl::run_score(m, stiff, dir / "a" / "feat", dir / "a" / "ubm.gmm", dir / "stiff", dir / "s.txt");
    for (const auto& r : s.records) CHECK(std::abs(r.score) < 1e-6);
  }
}

}  // TEST_SUITE
