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


// sadkit command-line tool.
//
// Configuration precedence (lowest to highest): built-in defaults, the
// --config file, --set overrides, then dedicated flags such as --method.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sadkit/error.hpp"
#include "sadkit/hash.hpp"
#include "sadkit/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = sadkit::pipeline;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "experiment config (JSON)");
    app->add_option("--set", sets, "override a config field, e.g. gmm.mixtures=64")
        ->take_all();
    app->add_option("--seed", seed, "master random seed");
    app->add_option("-j,--jobs", jobs, "worker threads");
  }

  // `extra` holds dedicated-flag overrides, applied last.
  pl::ExperimentConfig build(const std::vector<std::string>& extra = {}) const {
    json j = json::object();
    if (!config_file.empty()) j = pl::config_to_json(pl::load_config(config_file));
    for (const auto& s : sets) pl::apply_override(j, s);
    if (seed) j["seed"] = *seed;
    if (jobs) j["jobs"] = *jobs;
    for (const auto& s : extra) pl::apply_override(j, s);
    return pl::config_from_json(j);
  }
};

std::set<pl::Role> parse_roles(const std::vector<std::string>& names) {
  std::set<pl::Role> roles;
  for (const auto& n : names) roles.insert(pl::parse_role(n));
  return roles;
}

std::string quote(const std::string& s) { return json(s).dump(); }

void print_sad_summary(const pl::SadSummary& s) {
  std::printf("utterances=%zu frames=%zu speech_frames=%zu retained=%.2f%%\n", s.utterances,
              s.frames, s.speech_frames, 100.0 * s.retained());
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("sadkit"));
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"sadkit: speech activity detection and GMM-UBM speaker verification"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  // sad
  auto* sad = app.add_subcommand("sad", "run speech activity detection and write masks");
  ConfigFlags sad_cfg;
  sad_cfg.attach(sad);
  std::string sad_manifest, sad_method, sad_out;
  std::vector<std::string> sad_wavs;
  sad->add_option("-m,--manifest", sad_manifest, "manifest (JSON)");
  sad->add_option("wavs", sad_wavs, "input WAV files (instead of a manifest)");
  sad->add_option("--method", sad_method, "g729b, smsad, mebts, aebts, ubgme or none");
  sad->add_option("-o,--out", sad_out, "mask file")->required();

  // mix
  auto* mix = app.add_subcommand("mix", "add noise to manifest utterances");
  ConfigFlags mix_cfg;
  mix_cfg.attach(mix);
  std::string mix_manifest, mix_out, mix_noise;
  std::optional<double> mix_snr;
  std::vector<std::string> mix_pool, mix_roles;
  std::vector<double> mix_range;
  bool mix_wrap = false;
  mix->add_option("-m,--manifest", mix_manifest, "manifest (JSON)")->required();
  mix->add_option("-o,--out-dir", mix_out, "output directory")->required();
  mix->add_option("--noise", mix_noise, "fixed mode: noise id");
  mix->add_option("--snr", mix_snr, "fixed mode: SNR in dB");
  mix->add_option("--pool", mix_pool, "policy mode: noise ids")->delimiter(',');
  mix->add_option("--snr-range", mix_range, "policy mode: lo hi (dB)")->expected(2);
  mix->add_flag("--wrap", mix_wrap, "allow noise to wrap around");
  mix->add_option("--roles", mix_roles, "roles to distort (default: test)")->delimiter(',');

  // extract
  auto* extract = app.add_subcommand("extract", "SAD + MFCC feature extraction");
  ConfigFlags ex_cfg;
  ex_cfg.attach(extract);
  std::string ex_manifest, ex_dir, ex_method;
  std::vector<std::string> ex_roles;
  extract->add_option("-m,--manifest", ex_manifest, "manifest (JSON)")->required();
  extract->add_option("-f,--features", ex_dir, "feature directory")->required();
  extract->add_option("--method", ex_method, "SAD method");
  extract->add_option("--roles", ex_roles, "roles to process (default: all)")->delimiter(',');

  // train-ubm
  auto* ubm = app.add_subcommand("train-ubm", "train the universal background model");
  ConfigFlags ubm_cfg;
  ubm_cfg.attach(ubm);
  std::string ubm_manifest, ubm_feats, ubm_out, ubm_gender, ubm_method;
  std::optional<int> ubm_mix;
  ubm->add_option("-m,--manifest", ubm_manifest, "manifest (JSON)")->required();
  ubm->add_option("-f,--features", ubm_feats, "feature directory")->required();
  ubm->add_option("-o,--out", ubm_out, "UBM model file")->required();
  ubm->add_option("--gender", ubm_gender, "restrict to one gender partition");
  ubm->add_option("--mixtures", ubm_mix, "number of components");
  ubm->add_option("--method", ubm_method, "SAD method the features were made with");

  // adapt
  auto* adapt = app.add_subcommand("adapt", "MAP-adapt speaker models from the UBM");
  ConfigFlags ad_cfg;
  ad_cfg.attach(adapt);
  std::string ad_manifest, ad_feats, ad_ubm, ad_models, ad_method;
  std::vector<std::string> ad_roles{"train"};
  adapt->add_option("-m,--manifest", ad_manifest, "manifest (JSON)")->required();
  adapt->add_option("-f,--features", ad_feats, "feature directory")->required();
  adapt->add_option("-u,--ubm", ad_ubm, "UBM model file")->required();
  adapt->add_option("-o,--models", ad_models, "model directory")->required();
  adapt->add_option("--roles", ad_roles, "roles to enroll (default: train)")->delimiter(',');
  adapt->add_option("--method", ad_method, "SAD method the features were made with");

  // score
  auto* score = app.add_subcommand("score", "score the trial list");
  ConfigFlags sc_cfg;
  sc_cfg.attach(score);
  std::string sc_manifest, sc_feats, sc_ubm, sc_models, sc_out, sc_cohort_out, sc_method;
  score->add_option("-m,--manifest", sc_manifest, "manifest (JSON)")->required();
  score->add_option("-f,--features", sc_feats, "feature directory")->required();
  score->add_option("-u,--ubm", sc_ubm, "UBM model file")->required();
  score->add_option("--models", sc_models, "model directory")->required();
  score->add_option("-o,--out", sc_out, "score file")->required();
  score->add_option("--cohort-out", sc_cohort_out, "also score test segments against cohort models");
  score->add_option("--method", sc_method, "SAD method the features were made with");

  // tnorm
  auto* tn = app.add_subcommand("tnorm", "test-normalize scores with cohort scores");
  std::string tn_raw, tn_cohort, tn_out;
  tn->add_option("-s,--scores", tn_raw, "raw score file")->required();
  tn->add_option("--cohort", tn_cohort, "cohort score file")->required();
  tn->add_option("-o,--out", tn_out, "normalized score file")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "EER, minDCF and DET curve");
  ConfigFlags ev_cfg;
  ev_cfg.attach(ev);
  std::string ev_scores, ev_report, ev_det;
  std::optional<double> ev_cfr, ev_cfa, ev_pt;
  ev->add_option("-s,--scores", ev_scores, "score file")->required();
  ev->add_option("-o,--report", ev_report, "metric report file");
  ev->add_option("--det", ev_det, "DET curve CSV");
  ev->add_option("--cost-fr", ev_cfr, "cost of a false rejection");
  ev->add_option("--cost-fa", ev_cfa, "cost of a false acceptance");
  ev->add_option("--p-target", ev_pt, "target prior");

  // spectrum
  auto* sp = app.add_subcommand("spectrum", "average magnitude spectrum over all frames");
  std::vector<std::string> sp_wavs;
  std::string sp_out, sp_window = "hamming";
  std::size_t sp_nfft = 256;
  double sp_frame = 20.0, sp_hop = 10.0;
  sp->add_option("wavs", sp_wavs, "input WAV files")->required();
  sp->add_option("-o,--out", sp_out, "CSV output (freq_hz,magnitude)")->required();
  sp->add_option("--nfft", sp_nfft, "FFT size");
  sp->add_option("--frame-ms", sp_frame, "frame length");
  sp->add_option("--hop-ms", sp_hop, "hop length");
  sp->add_option("--window", sp_window, "rectangular or hamming");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(sadkit::ErrorClass::kUsage);
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  auto method_override = [](const std::string& m) {
    return m.empty() ? std::vector<std::string>{} : std::vector<std::string>{"sad.method=" + quote(m)};
  };

  try {
    if (sad->parsed()) {
      const auto config = sad_cfg.build(method_override(sad_method));
      std::vector<pl::Utterance> utts;
      if (!sad_manifest.empty()) {
        utts = pl::load_manifest(sad_manifest).utterances;
      }
      for (const auto& w : sad_wavs) {
        if (!fs::exists(w)) throw sadkit::Error(sadkit::Errc::kIo, "cannot open " + w);
        pl::Utterance u;
        u.id = fs::path(w).stem().string();
        u.path = w;
        utts.push_back(u);
      }
      if (utts.empty()) throw sadkit::Error(sadkit::Errc::kInvalidArgument, "no inputs given");
      print_sad_summary(pl::run_sad(utts, config, sad_out));
    } else if (mix->parsed()) {
      std::vector<std::string> extra;
      if (!mix_noise.empty() || mix_snr) {
        extra.push_back("noise.mode=\"fixed\"");
        if (!mix_noise.empty()) extra.push_back("noise.noise_id=" + quote(mix_noise));
        if (mix_snr) extra.push_back("noise.snr_db=" + json(*mix_snr).dump());
      }
      if (!mix_pool.empty() || !mix_range.empty()) {
        extra.push_back("noise.mode=\"policy\"");
        if (!mix_pool.empty()) extra.push_back("noise.pool=" + json(mix_pool).dump());
        if (!mix_range.empty()) {
          extra.push_back("noise.snr_lo_db=" + json(mix_range[0]).dump());
          extra.push_back("noise.snr_hi_db=" + json(mix_range[1]).dump());
        }
      }
      if (mix_wrap) extra.push_back("noise.allow_wrap=true");
      if (!mix_roles.empty()) extra.push_back("noise.roles=" + json(mix_roles).dump());
      const auto config = mix_cfg.build(extra);
      const auto s = pl::run_mix(pl::load_manifest(mix_manifest), config, mix_out);
      std::printf("mixed=%zu manifest=%s provenance=%s\n", s.records.size(),
                  s.manifest.string().c_str(), s.provenance.string().c_str());
    } else if (extract->parsed()) {
      const auto config = ex_cfg.build(method_override(ex_method));
      const auto roles = ex_roles.empty()
                             ? std::set<pl::Role>{pl::Role::kUbm, pl::Role::kTrain, pl::Role::kTest,
                                                  pl::Role::kCohort}
                             : parse_roles(ex_roles);
      print_sad_summary(pl::run_extract(pl::load_manifest(ex_manifest), config, ex_dir, roles));
    } else if (ubm->parsed()) {
      auto extra = method_override(ubm_method);
      if (ubm_mix) extra.push_back("gmm.mixtures=" + std::to_string(*ubm_mix));
      const auto config = ubm_cfg.build(extra);
      pl::run_train_ubm(pl::load_manifest(ubm_manifest), config, ubm_feats, ubm_out, ubm_gender);
      std::printf("ubm=%s config=%s\n", ubm_out.c_str(),
                  sadkit::hash_hex(pl::stage_hashes(config).ubm).c_str());
    } else if (adapt->parsed()) {
      const auto config = ad_cfg.build(method_override(ad_method));
      const auto speakers = pl::run_adapt(pl::load_manifest(ad_manifest), config, ad_feats, ad_ubm,
                                          ad_models, parse_roles(ad_roles));
      std::printf("models=%zu config=%s\n", speakers.size(),
                  sadkit::hash_hex(pl::stage_hashes(config).models).c_str());
    } else if (score->parsed()) {
      const auto config = sc_cfg.build(method_override(sc_method));
      const auto manifest = pl::load_manifest(sc_manifest);
      const auto s = pl::run_score(manifest, config, sc_feats, sc_ubm, sc_models, sc_out);
      std::printf("trials=%zu config=%s\n", s.records.size(),
                  sadkit::hash_hex(s.config_hash).c_str());
      if (!sc_cohort_out.empty()) {
        const auto c =
            pl::run_cohort_score(manifest, config, sc_feats, sc_ubm, sc_models, sc_cohort_out);
        std::printf("cohort_scores=%zu\n", c.records.size());
      }
    } else if (tn->parsed()) {
      const auto s = pl::run_tnorm(tn_raw, tn_cohort, tn_out);
      std::printf("trials=%zu config=%s\n", s.records.size(),
                  sadkit::hash_hex(s.config_hash).c_str());
    } else if (ev->parsed()) {
      std::vector<std::string> extra;
      if (ev_cfr) extra.push_back("dcf.cost_fr=" + json(*ev_cfr).dump());
      if (ev_cfa) extra.push_back("dcf.cost_fa=" + json(*ev_cfa).dump());
      if (ev_pt) extra.push_back("dcf.p_target=" + json(*ev_pt).dump());
      const auto config = ev_cfg.build(extra);
      const auto report = pl::run_eval(ev_scores, config.dcf, ev_report, ev_det);
      std::cout << sadkit::eval::format_report(report);
    } else if (sp->parsed()) {
      sadkit::FramingSpec framing;
      framing.frame_len_ms = sp_frame;
      framing.hop_ms = sp_hop;
      if (sp_window == "hamming") {
        framing.window = sadkit::Window::kHamming;
      } else if (sp_window == "rectangular") {
        framing.window = sadkit::Window::kRectangular;
      } else {
        throw sadkit::Error(sadkit::Errc::kInvalidArgument, "unknown window '" + sp_window + "'");
      }
      std::vector<fs::path> paths(sp_wavs.begin(), sp_wavs.end());
      const auto spec = pl::run_spectrum(paths, framing, sp_nfft, sp_out);
      std::printf("bins=%zu out=%s\n", spec.size(), sp_out.c_str());
    }
  } catch (const sadkit::Error& e) {
    spdlog::error("{} ({})", e.what(), sadkit::errc_name(e.code()));
    return static_cast<int>(sadkit::error_class(e.code()));
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(sadkit::ErrorClass::kIo);
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
  return 0;
}
