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


#include "sadkit/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "detail/parallel.hpp"
#include "sadkit/error.hpp"
#include "sadkit/hash.hpp"

namespace sadkit::pipeline {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Reads fields of one JSON object, remembering which keys were consumed so
// leftovers (typos) can be reported.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) {
      throw Error(Errc::kInvalidArgument, "config section '" + name_ + "' must be an object");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw Error(Errc::kInvalidArgument, "config key '" + path(key) + "': " + e.what());
    }
  }

  void get_size(const char* key, std::size_t& out) {
    long long v = static_cast<long long>(out);
    get(key, v);
    if (v < 0) throw Error(Errc::kInvalidArgument, "config key '" + path(key) + "' must be >= 0");
    out = static_cast<std::size_t>(v);
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, path(key));
  }

  bool has(const char* key) const { return j_.contains(key); }
  void skip(const char* key) { seen_.insert(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) {
        throw Error(Errc::kInvalidArgument, "unknown config key '" + path(k) + "'");
      }
    }
  }

 private:
  std::string path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base_dir, const fs::path& p) {
  return p.is_absolute() ? p : (base_dir / p).lexically_normal();
}

std::string relative_to(const fs::path& p, const fs::path& dir) {
  if (p.empty()) return {};
  const fs::path rel = fs::absolute(p).lexically_proximate(fs::absolute(dir));
  return rel.generic_string();
}

json manifest_to_json(const Manifest& m, const fs::path& dir) {
  json j;
  j["utterances"] = json::array();
  for (const auto& u : m.utterances) {
    j["utterances"].push_back({{"id", u.id},
                               {"path", relative_to(u.path, dir)},
                               {"speaker", u.speaker},
                               {"gender", u.gender},
                               {"role", std::string(role_name(u.role))}});
  }
  json noises = json::object();
  for (const auto& [id, p] : m.noises) noises[id] = relative_to(p, dir);
  j["noises"] = noises;
  if (!m.trials.empty()) j["trials"] = relative_to(m.trials, dir);
  return j;
}

fs::path feature_path(const fs::path& dir, const std::string& id) {
  return dir / (id + ".feat");
}

fs::path model_path(const fs::path& dir, const std::string& id) {
  return dir / (id + ".gmm");
}

features::FeatureMatrix load_features(const fs::path& dir, const std::string& id,
                                      std::uint64_t expected) {
  const fs::path p = feature_path(dir, id);
  if (!fs::exists(p)) {
    throw Error(Errc::kNotFound, "features for '" + id + "' not found at " + p.string());
  }
  auto loaded = features::read_features(p);
  if (loaded.config_hash != expected) {
    throw Error(Errc::kStaleArtifact,
                p.string() + " was produced with config " + hash_hex(loaded.config_hash) +
                    ", expected " + hash_hex(expected));
  }
  return std::move(loaded.features);
}

gmm::GmmModel load_model(const fs::path& p, std::uint64_t expected, const char* what) {
  if (!fs::exists(p)) {
    throw Error(Errc::kNotFound, std::string(what) + " not found at " + p.string());
  }
  auto loaded = gmm::read_model(p);
  if (loaded.config_hash != expected) {
    throw Error(Errc::kStaleArtifact,
                p.string() + " was produced with config " + hash_hex(loaded.config_hash) +
                    ", expected " + hash_hex(expected));
  }
  return std::move(loaded.model);
}

RowMatrix stack(const std::vector<features::FeatureMatrix>& parts) {
  Eigen::Index rows = 0, dim = -1;
  for (const auto& f : parts) {
    if (f.frames() == 0) continue;
    if (dim >= 0 && f.dim() != dim) {
      throw Error(Errc::kDimensionMismatch, "feature dimension differs for '" + f.source_id + "'");
    }
    dim = f.dim();
    rows += f.frames();
  }
  if (rows == 0) return RowMatrix();
  RowMatrix out(rows, dim);
  Eigen::Index r = 0;
  for (const auto& f : parts) {
    if (f.frames() == 0) continue;
    out.middleRows(r, f.frames()) = f.vectors;
    r += f.frames();
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  write_atomically(path, [&](const fs::path& tmp) {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(Errc::kIo, "cannot write " + tmp.string());
    os << text;
    if (!os) throw Error(Errc::kIo, "write failed for " + tmp.string());
  });
}

void write_sidecar(const fs::path& artifact, const char* stage, std::uint64_t hash,
                   const Manifest& manifest, const ExperimentConfig& config,
                   json extra) {
  json j;
  j["stage"] = stage;
  j["config_hash"] = hash_hex(hash);
  j["manifest_hash"] = hash_hex(manifest_hash(manifest));
  j["config"] = config_to_json(config);
  for (auto& [k, v] : extra.items()) j[k] = v;
  fs::path p = artifact;
  p += ".json";
  write_text(p, j.dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& p) { ensure_dir(p.parent_path()); }

}  // namespace

// ---- names ------------------------------------------------------------------

SadMethod parse_sad_method(std::string_view name) {
  const std::string n = lower(name);
  if (n == "g729b" || n == "g.729b") return SadMethod::kG729b;
  if (n == "smsad") return SadMethod::kSmsad;
  if (n == "mebts") return SadMethod::kMebts;
  if (n == "aebts") return SadMethod::kAebts;
  if (n == "ubgme") return SadMethod::kUbgme;
  if (n == "none") return SadMethod::kNone;
  throw Error(Errc::kInvalidArgument,
              "unknown SAD method '" + std::string(name) +
                  "' (expected g729b, smsad, mebts, aebts, ubgme or none)");
}

std::string_view sad_method_name(SadMethod method) {
  switch (method) {
    case SadMethod::kNone: return "none";
    case SadMethod::kG729b: return "g729b";
    case SadMethod::kSmsad: return "smsad";
    case SadMethod::kMebts: return "mebts";
    case SadMethod::kAebts: return "aebts";
    case SadMethod::kUbgme: return "ubgme";
  }
  return "?";
}

Role parse_role(std::string_view name) {
  const std::string n = lower(name);
  if (n == "ubm") return Role::kUbm;
  if (n == "train") return Role::kTrain;
  if (n == "test") return Role::kTest;
  if (n == "cohort") return Role::kCohort;
  throw Error(Errc::kInvalidArgument, "unknown role '" + std::string(name) + "'");
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kUbm: return "ubm";
    case Role::kTrain: return "train";
    case Role::kTest: return "test";
    case Role::kCohort: return "cohort";
  }
  return "?";
}

// ---- manifest -----------------------------------------------------------------

const Utterance& Manifest::find(const std::string& id) const {
  for (const auto& u : utterances) {
    if (u.id == id) return u;
  }
  throw Error(Errc::kNotFound, "utterance '" + id + "' is not in the manifest");
}

std::vector<Utterance> Manifest::select(const std::set<Role>& roles,
                                        const std::string& gender) const {
  std::vector<Utterance> out;
  for (const auto& u : utterances) {
    if (roles.contains(u.role) && (gender.empty() || u.gender == gender)) out.push_back(u);
  }
  return out;
}

Manifest load_manifest(const fs::path& path, bool check_files) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::kIo, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(Errc::kFormat, "manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("utterances") || !j["utterances"].is_array()) {
    throw Error(Errc::kFormat, "manifest " + path.string() + " needs an 'utterances' array");
  }
  const fs::path dir = path.parent_path();
  Manifest m;
  m.source = path;
  std::set<std::string> ids;
  for (const auto& e : j["utterances"]) {
    try {
      Utterance u;
      u.id = e.at("id").get<std::string>();
      u.path = resolve(dir, e.at("path").get<std::string>());
      u.speaker = e.contains("speaker") ? e["speaker"].get<std::string>()
                                        : e.at("speaker_id").get<std::string>();
      u.gender = e.value("gender", std::string());
      u.role = parse_role(e.at("role").get<std::string>());
      if (u.id.empty() || u.id.find_first_of(" \t\n/\\") != std::string::npos) {
        throw Error(Errc::kFormat, "invalid utterance id '" + u.id + "'");
      }
      if (!ids.insert(u.id).second) {
        throw Error(Errc::kFormat, "duplicate utterance id '" + u.id + "' in manifest");
      }
      m.utterances.push_back(std::move(u));
    } catch (const json::exception& ex) {
      throw Error(Errc::kFormat, "manifest entry " + e.dump() + ": " + ex.what());
    }
  }
  if (j.contains("noises")) {
    const auto& n = j["noises"];
    if (n.is_string()) {
      m.noises = noise::read_noise_manifest(resolve(dir, n.get<std::string>()));
    } else if (n.is_object()) {
      for (const auto& [id, p] : n.items()) {
        if (!p.is_string()) throw Error(Errc::kFormat, "noise '" + id + "' path must be a string");
        m.noises[id] = resolve(dir, p.get<std::string>());
      }
    } else {
      throw Error(Errc::kFormat, "manifest 'noises' must be an object or a path");
    }
  }
  if (j.contains("trials")) m.trials = resolve(dir, j["trials"].get<std::string>());

  if (check_files) {
    auto require = [](const fs::path& p, const std::string& what) {
      if (!fs::exists(p)) throw Error(Errc::kNotFound, what + " file missing: " + p.string());
    };
    for (const auto& u : m.utterances) require(u.path, "utterance '" + u.id + "'");
    for (const auto& [id, p] : m.noises) require(p, "noise '" + id + "'");
    if (!m.trials.empty()) require(m.trials, "trial list");
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  ensure_parent(path);
  write_text(path, manifest_to_json(manifest, path.parent_path()).dump(2) + "\n");
}

// Paths are hashed in absolute form so the hash names the same files no
// matter where the manifest itself lives.
std::uint64_t manifest_hash(const Manifest& manifest) {
  return fnv1a64(manifest_to_json(manifest, fs::path("/")).dump());
}

// ---- config -------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (jobs < 1) throw Error(Errc::kInvalidArgument, "jobs must be >= 1");
  if (!(framing.frame_len_ms > 0.0) || !(framing.hop_ms > 0.0)) {
    throw Error(Errc::kInvalidArgument, "frame and hop lengths must be positive");
  }
  if (!(aebts_factor > 0.0)) throw Error(Errc::kInvalidArgument, "aebts_factor must be positive");
  if (!(mebts_margin_db >= 0.0)) throw Error(Errc::kInvalidArgument, "mebts_margin_db must be >= 0");
  sohn.validate();
  g729b.validate();
  mfcc.validate();
  em.validate();
  if (mixtures < 1 || (mixtures & (mixtures - 1)) != 0) {
    throw Error(Errc::kInvalidArgument, "mixtures must be a power of two");
  }
  if (!(map.relevance_factor > 0.0)) {
    throw Error(Errc::kInvalidArgument, "relevance_factor must be positive");
  }
  if (top_c < 1) {
    throw Error(Errc::kInvalidArgument, "top_c must be >= 1");
  }
  dcf.validate();
  if (noise) {
    if (noise->mode == NoiseSettings::Mode::kFixed) {
      if (noise->noise_id.empty()) throw Error(Errc::kInvalidArgument, "noise.noise_id is required");
    } else {
      noise::DistortionPolicy p{noise->pool, noise->snr_lo_db, noise->snr_hi_db, seed,
                                noise->allow_wrap};
      p.validate();
    }
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section top(j, "");
  top.get("seed", c.seed);
  top.get("jobs", c.jobs);
  if (auto s = top.sub("framing")) {
    s->get("frame_ms", c.framing.frame_len_ms);
    s->get("hop_ms", c.framing.hop_ms);
    s->finish();
  }
  if (auto s = top.sub("sad")) {
    std::string method(sad_method_name(c.sad_method));
    s->get("method", method);
    c.sad_method = parse_sad_method(method);
    s->get("aebts_factor", c.aebts_factor);
    s->get("mebts_margin_db", c.mebts_margin_db);
    if (auto u = s->sub("ubgme")) {
      u->get("max_iters", c.bigaussian.max_iters);
      u->get("loglik_rel_tol", c.bigaussian.loglik_rel_tol);
      u->get("variance_floor", c.bigaussian.variance_floor);
      u->finish();
    }
    if (auto u = s->sub("smsad")) {
      u->get("dd_alpha", c.sohn.dd_alpha);
      u->get("log_eta", c.sohn.log_eta);
      u->get("noise_update", c.sohn.noise_update);
      u->get_size("nfft", c.sohn.nfft);
      u->get("init_frames", c.sohn.init_frames);
      u->get("hangover_frames", c.sohn.hangover_frames);
      u->finish();
    }
    if (auto u = s->sub("g729b")) {
      u->get("init_frames", c.g729b.init_frames);
      u->get("lpc_order", c.g729b.lpc_order);
      u->get_size("nfft", c.g729b.nfft);
      u->get("low_band_hz", c.g729b.low_band_hz);
      u->get("energy_gate_db", c.g729b.energy_gate_db);
      u->get("veto_after_frames", c.g729b.veto_after_frames);
      u->get("max_background_updates", c.g729b.max_background_updates);
      u->get("min_burst_frames", c.g729b.min_burst_frames);
      u->get("burst_silence_frames", c.g729b.burst_silence_frames);
      u->get("hangover_frames", c.g729b.hangover_frames);
      u->finish();
    }
    s->finish();
  }
  if (auto s = top.sub("features")) {
    s->get("n_mel_filters", c.mfcc.n_mel_filters);
    s->get("n_ceps", c.mfcc.n_ceps);
    s->get("delta_window", c.mfcc.delta_window);
    s->get_size("nfft", c.mfcc.nfft);
    s->get("preemphasis", c.mfcc.preemphasis);
    s->get("low_hz", c.mfcc.low_hz);
    s->get("high_hz", c.mfcc.high_hz);
    s->get("cmvn", c.cmvn);
    s->finish();
  }
  if (auto s = top.sub("gmm")) {
    s->get("mixtures", c.mixtures);
    s->get("max_iters", c.em.max_iters);
    s->get("stage_iters", c.em.stage_iters);
    s->get("loglik_rel_tol", c.em.loglik_rel_tol);
    s->get("variance_floor_factor", c.em.variance_floor_factor);
    s->get("split_delta", c.em.split_delta);
    s->get("kmeans_max_iters", c.em.kmeans_max_iters);
    s->get("kmeans_rel_tol", c.em.kmeans_rel_tol);
    s->finish();
  }
  if (auto s = top.sub("map")) {
    s->get("relevance_factor", c.map.relevance_factor);
    s->finish();
  }
  if (auto s = top.sub("scoring")) {
    s->get("top_c", c.top_c);
    s->finish();
  }
  if (auto s = top.sub("dcf")) {
    s->get("cost_fr", c.dcf.cost_fr);
    s->get("cost_fa", c.dcf.cost_fa);
    s->get("p_target", c.dcf.p_target);
    s->finish();
  }
  if (top.has("noise") && !j["noise"].is_null()) {
    auto s = top.sub("noise");
    NoiseSettings n;
    std::string mode = "fixed";
    s->get("mode", mode);
    if (mode == "fixed") {
      n.mode = NoiseSettings::Mode::kFixed;
    } else if (mode == "policy") {
      n.mode = NoiseSettings::Mode::kPolicy;
    } else {
      throw Error(Errc::kInvalidArgument, "noise.mode must be 'fixed' or 'policy'");
    }
    s->get("noise_id", n.noise_id);
    s->get("snr_db", n.snr_db);
    s->get("pool", n.pool);
    s->get("snr_lo_db", n.snr_lo_db);
    s->get("snr_hi_db", n.snr_hi_db);
    s->get("allow_wrap", n.allow_wrap);
    std::vector<std::string> roles;
    s->get("roles", roles);
    if (!roles.empty()) {
      n.roles.clear();
      for (const auto& r : roles) n.roles.insert(parse_role(r));
    }
    s->finish();
    c.noise = std::move(n);
  } else {
    top.skip("noise");
  }
  top.finish();
  c.em.rng_seed = c.seed;
  c.em.threads = c.jobs;
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["framing"] = {{"frame_ms", c.framing.frame_len_ms}, {"hop_ms", c.framing.hop_ms}};
  j["sad"] = {
      {"method", std::string(sad_method_name(c.sad_method))},
      {"aebts_factor", c.aebts_factor},
      {"mebts_margin_db", c.mebts_margin_db},
      {"ubgme",
       {{"max_iters", c.bigaussian.max_iters},
        {"loglik_rel_tol", c.bigaussian.loglik_rel_tol},
        {"variance_floor", c.bigaussian.variance_floor}}},
      {"smsad",
       {{"dd_alpha", c.sohn.dd_alpha},
        {"log_eta", c.sohn.log_eta},
        {"noise_update", c.sohn.noise_update},
        {"nfft", c.sohn.nfft},
        {"init_frames", c.sohn.init_frames},
        {"hangover_frames", c.sohn.hangover_frames}}},
      {"g729b",
       {{"init_frames", c.g729b.init_frames},
        {"lpc_order", c.g729b.lpc_order},
        {"nfft", c.g729b.nfft},
        {"low_band_hz", c.g729b.low_band_hz},
        {"energy_gate_db", c.g729b.energy_gate_db},
        {"veto_after_frames", c.g729b.veto_after_frames},
        {"max_background_updates", c.g729b.max_background_updates},
        {"min_burst_frames", c.g729b.min_burst_frames},
        {"burst_silence_frames", c.g729b.burst_silence_frames},
        {"hangover_frames", c.g729b.hangover_frames}}}};
  j["features"] = {{"n_mel_filters", c.mfcc.n_mel_filters},
                   {"n_ceps", c.mfcc.n_ceps},
                   {"delta_window", c.mfcc.delta_window},
                   {"nfft", c.mfcc.nfft},
                   {"preemphasis", c.mfcc.preemphasis},
                   {"low_hz", c.mfcc.low_hz},
                   {"high_hz", c.mfcc.high_hz},
                   {"cmvn", c.cmvn}};
  j["gmm"] = {{"mixtures", c.mixtures},
              {"max_iters", c.em.max_iters},
              {"stage_iters", c.em.stage_iters},
              {"loglik_rel_tol", c.em.loglik_rel_tol},
              {"variance_floor_factor", c.em.variance_floor_factor},
              {"split_delta", c.em.split_delta},
              {"kmeans_max_iters", c.em.kmeans_max_iters},
              {"kmeans_rel_tol", c.em.kmeans_rel_tol}};
  j["map"] = {{"relevance_factor", c.map.relevance_factor}};
  j["scoring"] = {{"top_c", c.top_c}};
  j["dcf"] = {{"cost_fr", c.dcf.cost_fr}, {"cost_fa", c.dcf.cost_fa}, {"p_target", c.dcf.p_target}};
  if (c.noise) {
    const auto& n = *c.noise;
    std::vector<std::string> roles;
    for (Role r : n.roles) roles.emplace_back(role_name(r));
    j["noise"] = {{"mode", n.mode == NoiseSettings::Mode::kFixed ? "fixed" : "policy"},
                  {"noise_id", n.noise_id},
                  {"snr_db", n.snr_db},
                  {"pool", n.pool},
                  {"snr_lo_db", n.snr_lo_db},
                  {"snr_hi_db", n.snr_hi_db},
                  {"allow_wrap", n.allow_wrap},
                  {"roles", roles}};
  } else {
    j["noise"] = nullptr;
  }
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(Errc::kFormat, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(Errc::kInvalidArgument, "override must look like key.path=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw Error(Errc::kInvalidArgument, "bad override key: " + key);
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw Error(Errc::kInvalidArgument, "override path is not an object: " + key);
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

StageHashes stage_hashes(const ExperimentConfig& config) {
  const json j = config_to_json(config);
  StageHashes h;
  h.sad = fnv1a64(json({{"seed", j["seed"]}, {"framing", j["framing"]}, {"sad", j["sad"]}}).dump());
  h.features = fnv1a64(j["features"].dump(), h.sad);
  h.ubm = fnv1a64(json({{"seed", j["seed"]}, {"gmm", j["gmm"]}}).dump(), h.features);
  h.models = fnv1a64(j["map"].dump(), h.ubm);
  h.scores = fnv1a64(j["scoring"].dump(), h.models);
  return h;
}

// ---- per-utterance ------------------------------------------------------------

sad::SpeechMask compute_mask(const Waveform& w, const ExperimentConfig& config) {
  FramingSpec rect = config.framing;
  rect.window = Window::kRectangular;
  sad::SpeechMask mask;
  switch (config.sad_method) {
    case SadMethod::kNone: {
      const FrameSequence f = frame_signal(w, rect);
      mask.decisions.assign(f.size(), 1);
      break;
    }
    case SadMethod::kAebts:
      mask = sad::sad_aebts(frame_energy(frame_signal(w, rect)).linear, config.aebts_factor);
      break;
    case SadMethod::kMebts:
      mask = sad::sad_mebts(frame_energy(frame_signal(w, rect)).db, config.mebts_margin_db);
      break;
    case SadMethod::kUbgme: {
      sad::BiGaussianConfig bg = config.bigaussian;
      bg.rng_seed = derive_seed(config.seed, w.id);
      mask = sad::sad_ubgme(frame_energy(frame_signal(w, rect)).db, bg);
      break;
    }
    case SadMethod::kSmsad: {
      FramingSpec ham = config.framing;
      ham.window = Window::kHamming;
      mask = sad::sad_sohn(frame_signal(w, ham), config.sohn);
      break;
    }
    case SadMethod::kG729b:
      mask = sad::sad_g729b(frame_signal(w, rect), config.g729b);
      break;
  }
  mask.spec = rect;
  mask.source_id = w.id;
  return mask;
}

UtteranceFeatures compute_utterance_features(const Waveform& w,
                                             const ExperimentConfig& config) {
  UtteranceFeatures out;
  out.mask = compute_mask(w, config);
  features::FeatureMatrix all = features::compute_features(w, config.framing, config.mfcc);
  if (out.mask.speech_frames() == 0) {
    spdlog::warn("SAD kept no frames of '{}'; using all frames", w.id);
    out.fell_back = true;
    out.features = std::move(all);
  } else {
    out.features.vectors = sad::apply_mask(all.vectors, out.mask);
    out.features.source_id = w.id;
  }
  if (config.cmvn && out.features.frames() > 0) out.features = features::cmvn(out.features);
  return out;
}

// ---- stages -------------------------------------------------------------------

SadSummary run_sad(const std::vector<Utterance>& utterances, const ExperimentConfig& config,
                   const fs::path& mask_file) {
  config.validate();
  sad::MaskFile file;
  file.config_hash = stage_hashes(config).sad;
  file.masks.resize(utterances.size());
  detail::parallel_for(utterances.size(), config.jobs, [&](std::size_t i) {
    Waveform w = read_wav(utterances[i].path);
    w.id = utterances[i].id;
    file.masks[i] = compute_mask(w, config);
  });
  SadSummary s;
  for (const auto& m : file.masks) {
    ++s.utterances;
    s.frames += m.size();
    s.speech_frames += m.speech_frames();
  }
  ensure_parent(mask_file);
  write_atomically(mask_file, [&](const fs::path& tmp) { sad::write_mask_file(tmp, file); });
  return s;
}

MixSummary run_mix(const Manifest& manifest, const ExperimentConfig& config,
                   const fs::path& out_dir) {
  config.validate();
  if (!config.noise) {
    throw Error(Errc::kInvalidArgument, "mixing needs noise settings (config 'noise' section)");
  }
  const NoiseSettings& ns = *config.noise;
  std::vector<std::string> needed =
      ns.mode == NoiseSettings::Mode::kFixed ? std::vector<std::string>{ns.noise_id} : ns.pool;
  std::map<std::string, fs::path> entries;
  for (const auto& id : needed) {
    auto it = manifest.noises.find(id);
    if (it == manifest.noises.end()) {
      throw Error(Errc::kNotFound, "noise '" + id + "' is not in the noise registry");
    }
    entries[id] = it->second;
  }
  const noise::NoiseRegistry registry = noise::load_noise_registry(entries);
  const noise::DistortionPolicy policy{ns.pool, ns.snr_lo_db, ns.snr_hi_db, config.seed,
                                       ns.allow_wrap};

  ensure_dir(out_dir);
  Manifest out = manifest;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < out.utterances.size(); ++i) {
    if (ns.roles.contains(out.utterances[i].role)) targets.push_back(i);
  }
  std::vector<noise::Provenance> records(targets.size());
  detail::parallel_for(targets.size(), config.jobs, [&](std::size_t k) {
    Utterance& u = out.utterances[targets[k]];
    Waveform w = read_wav(u.path);
    w.id = u.id;
    noise::NoiseMixSpec spec;
    if (ns.mode == NoiseSettings::Mode::kFixed) {
      spec = {ns.noise_id, ns.snr_db, derive_seed(config.seed, u.id), ns.allow_wrap};
    } else {
      const noise::Draw d = noise::draw_distortion(u.id, policy);
      spec = {d.noise_id, d.snr_db, d.offset_seed, ns.allow_wrap};
    }
    noise::MixResult r = noise::mix_noise(w, registry.at(spec.noise_id), spec);
    const fs::path wav = out_dir / (u.id + ".wav");
    write_atomically(wav, [&](const fs::path& tmp) { write_wav(tmp, r.mixed); });
    records[k] = {u.id, spec.noise_id, spec.snr_db, r.offset};
    u.path = wav;
  });

  MixSummary s;
  s.records = std::move(records);
  s.provenance = out_dir / "provenance.txt";
  s.manifest = out_dir / "manifest.json";
  write_atomically(s.provenance,
                   [&](const fs::path& tmp) { noise::write_provenance(tmp, s.records); });
  write_manifest(s.manifest, out);
  return s;
}

SadSummary run_extract(const Manifest& manifest, const ExperimentConfig& config,
                       const fs::path& feature_dir, const std::set<Role>& roles) {
  config.validate();
  const StageHashes h = stage_hashes(config);
  const std::vector<Utterance> utts = manifest.select(roles);
  ensure_dir(feature_dir);
  sad::MaskFile masks;
  masks.config_hash = h.sad;
  masks.masks.resize(utts.size());
  detail::parallel_for(utts.size(), config.jobs, [&](std::size_t i) {
    Waveform w = read_wav(utts[i].path);
    w.id = utts[i].id;
    UtteranceFeatures f = compute_utterance_features(w, config);
    const fs::path p = feature_path(feature_dir, w.id);
    write_atomically(p, [&](const fs::path& tmp) {
      features::write_features(tmp, f.features, h.features);
    });
    masks.masks[i] = std::move(f.mask);
  });
  SadSummary s;
  for (const auto& m : masks.masks) {
    ++s.utterances;
    s.frames += m.size();
    s.speech_frames += m.speech_frames();
  }
  write_atomically(feature_dir / "masks.txt",
                   [&](const fs::path& tmp) { sad::write_mask_file(tmp, masks); });
  return s;
}

void run_train_ubm(const Manifest& manifest, const ExperimentConfig& config,
                   const fs::path& feature_dir, const fs::path& ubm_path,
                   const std::string& gender) {
  config.validate();
  const StageHashes h = stage_hashes(config);
  const std::vector<Utterance> utts = manifest.select({Role::kUbm}, gender);
  if (utts.empty()) {
    throw Error(Errc::kNotFound, "manifest has no ubm utterances" +
                                     (gender.empty() ? std::string() : " of gender '" + gender + "'"));
  }
  std::vector<features::FeatureMatrix> parts(utts.size());
  detail::parallel_for(utts.size(), config.jobs, [&](std::size_t i) {
    parts[i] = load_features(feature_dir, utts[i].id, h.features);
  });
  const RowMatrix data = stack(parts);
  if (data.rows() == 0) throw Error(Errc::kTooShort, "no UBM training frames");
  gmm::EmConfig em = config.em;
  em.rng_seed = derive_seed(config.seed, "ubm:" + gender);
  em.threads = config.jobs;
  gmm::GmmModel ubm = gmm::train_ubm(data, config.mixtures, em);
  ubm.gender = gender;
  ensure_parent(ubm_path);
  write_atomically(ubm_path, [&](const fs::path& tmp) { gmm::write_model(tmp, ubm, h.ubm); });
  write_sidecar(ubm_path, "train-ubm", h.ubm, manifest, config,
                {{"utterances", utts.size()}, {"frames", data.rows()}, {"gender", gender}});
}

std::vector<std::string> run_adapt(const Manifest& manifest, const ExperimentConfig& config,
                                   const fs::path& feature_dir, const fs::path& ubm_path,
                                   const fs::path& model_dir, const std::set<Role>& roles) {
  config.validate();
  const StageHashes h = stage_hashes(config);
  const gmm::GmmModel ubm = load_model(ubm_path, h.ubm, "UBM");
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& u : manifest.select(roles)) by_speaker[u.speaker].push_back(u.id);
  if (by_speaker.empty()) throw Error(Errc::kNotFound, "no utterances to adapt models from");
  std::vector<std::string> speakers;
  for (const auto& [spk, ids] : by_speaker) speakers.push_back(spk);
  ensure_dir(model_dir);
  detail::parallel_for(speakers.size(), config.jobs, [&](std::size_t i) {
    const auto& ids = by_speaker.at(speakers[i]);
    std::vector<features::FeatureMatrix> parts;
    for (const auto& id : ids) parts.push_back(load_features(feature_dir, id, h.features));
    const RowMatrix data = stack(parts);
    if (data.rows() == 0) {
      throw Error(Errc::kTooShort, "speaker '" + speakers[i] + "' has no frames");
    }
    gmm::GmmModel m = gmm::map_adapt(ubm, data, config.map);
    const fs::path p = model_path(model_dir, speakers[i]);
    write_atomically(p, [&](const fs::path& tmp) { gmm::write_model(tmp, m, h.models); });
    write_sidecar(p, "adapt", h.models, manifest, config,
                  {{"speaker", speakers[i]}, {"utterances", ids}, {"frames", data.rows()}});
  });
  return speakers;
}

namespace {

struct ScoringInputs {
  gmm::GmmModel ubm;
  std::map<std::string, gmm::GmmModel> models;
  std::map<std::string, RowMatrix> tests;
};

void load_scoring_inputs(ScoringInputs& in, const Manifest& manifest,
                         const ExperimentConfig& config, const fs::path& feature_dir,
                         const fs::path& ubm_path, const fs::path& model_dir,
                         const std::vector<std::string>& model_ids,
                         const std::vector<std::string>& test_ids) {
  const StageHashes h = stage_hashes(config);
  in.ubm = load_model(ubm_path, h.ubm, "UBM");
  for (const auto& id : model_ids) in.models.emplace(id, gmm::GmmModel{});
  for (const auto& id : test_ids) {
    manifest.find(id);
    in.tests.emplace(id, RowMatrix{});
  }
  std::vector<gmm::GmmModel*> mslots;
  std::vector<std::string> mnames;
  for (auto& [id, m] : in.models) {
    mnames.push_back(id);
    mslots.push_back(&m);
  }
  detail::parallel_for(mslots.size(), config.jobs, [&](std::size_t i) {
    *mslots[i] = load_model(model_path(model_dir, mnames[i]), h.models,
                            ("model '" + mnames[i] + "'").c_str());
  });
  std::vector<RowMatrix*> tslots;
  std::vector<std::string> tnames;
  for (auto& [id, t] : in.tests) {
    tnames.push_back(id);
    tslots.push_back(&t);
  }
  detail::parallel_for(tslots.size(), config.jobs, [&](std::size_t i) {
    *tslots[i] = load_features(feature_dir, tnames[i], h.features).vectors;
    if (tslots[i]->rows() == 0) {
      throw Error(Errc::kTooShort, "test segment '" + tnames[i] + "' has no frames");
    }
  });
}

void score_records(eval::TrialScoreSet& out, const ScoringInputs& in,
                   const ExperimentConfig& config) {
  detail::parallel_for(out.records.size(), config.jobs, [&](std::size_t i) {
    auto& r = out.records[i];
    r.score = gmm::topc_llr(in.ubm, in.models.at(r.model_id), in.tests.at(r.test_id),
                            std::min(config.top_c, in.ubm.num_components()));
  });
}

eval::TrialSet load_trial_list(const Manifest& manifest) {
  if (manifest.trials.empty()) throw Error(Errc::kNotFound, "manifest has no trial list");
  eval::TrialSet t = eval::read_trials(manifest.trials);
  t.validate();
  return t;
}

}  // namespace

eval::TrialScoreSet run_score(const Manifest& manifest, const ExperimentConfig& config,
                              const fs::path& feature_dir, const fs::path& ubm_path,
                              const fs::path& model_dir, const fs::path& score_file) {
  config.validate();
  const eval::TrialSet trials = load_trial_list(manifest);
  std::vector<std::string> model_ids, test_ids;
  for (const auto& t : trials.trials) {
    model_ids.push_back(t.model_id);
    test_ids.push_back(t.test_id);
  }
  ScoringInputs in;
  load_scoring_inputs(in, manifest, config, feature_dir, ubm_path, model_dir, model_ids, test_ids);
  eval::TrialScoreSet out;
  out.config_hash = stage_hashes(config).scores;
  for (const auto& t : trials.trials) out.records.push_back({t.model_id, t.test_id, 0.0, t.is_target});
  score_records(out, in, config);
  ensure_parent(score_file);
  write_atomically(score_file, [&](const fs::path& tmp) { eval::write_scores(tmp, out); });
  return out;
}

eval::TrialScoreSet run_cohort_score(const Manifest& manifest, const ExperimentConfig& config,
                                     const fs::path& feature_dir, const fs::path& ubm_path,
                                     const fs::path& model_dir, const fs::path& score_file) {
  config.validate();
  const eval::TrialSet trials = load_trial_list(manifest);
  std::vector<std::string> cohort;
  for (const auto& u : manifest.select({Role::kCohort})) {
    if (std::find(cohort.begin(), cohort.end(), u.speaker) == cohort.end()) {
      cohort.push_back(u.speaker);
    }
  }
  std::sort(cohort.begin(), cohort.end());
  if (cohort.size() < 2) throw Error(Errc::kNotFound, "t-norm needs at least 2 cohort speakers");
  std::vector<std::string> test_ids;
  for (const auto& t : trials.trials) {
    if (std::find(test_ids.begin(), test_ids.end(), t.test_id) == test_ids.end()) {
      test_ids.push_back(t.test_id);
    }
  }
  ScoringInputs in;
  load_scoring_inputs(in, manifest, config, feature_dir, ubm_path, model_dir, cohort, test_ids);
  eval::TrialScoreSet out;
  out.config_hash = stage_hashes(config).scores;
  for (const auto& test : test_ids) {
    for (const auto& c : cohort) out.records.push_back({c, test, 0.0, false});
  }
  score_records(out, in, config);
  ensure_parent(score_file);
  write_atomically(score_file, [&](const fs::path& tmp) { eval::write_scores(tmp, out); });
  return out;
}

eval::TrialScoreSet run_tnorm(const fs::path& raw_scores, const fs::path& cohort_scores,
                              const fs::path& out_scores) {
  const eval::TrialScoreSet raw = eval::read_scores(raw_scores);
  const eval::TrialScoreSet coh = eval::read_scores(cohort_scores);
  if (raw.config_hash != coh.config_hash) {
    throw Error(Errc::kStaleArtifact, "cohort scores (config " + hash_hex(coh.config_hash) +
                                          ") do not match raw scores (config " +
                                          hash_hex(raw.config_hash) + ")");
  }
  eval::TrialScoreSet out = eval::tnorm(raw, eval::cohort_from_scores(coh));
  out.config_hash = fnv1a64("tnorm", raw.config_hash);
  ensure_parent(out_scores);
  write_atomically(out_scores, [&](const fs::path& tmp) { eval::write_scores(tmp, out); });
  return out;
}

eval::MetricReport run_eval(const fs::path& score_file, const eval::DcfParams& params,
                            const fs::path& report_file, const fs::path& det_csv) {
  const eval::TrialScoreSet scores = eval::read_scores(score_file);
  const eval::MetricReport report = eval::evaluate(scores, params);
  if (!report_file.empty()) {
    ensure_parent(report_file);
    write_text(report_file, eval::format_report(report));
  }
  if (!det_csv.empty()) {
    ensure_parent(det_csv);
    const auto points = eval::det_points(scores);
    write_atomically(det_csv, [&](const fs::path& tmp) { eval::write_det_csv(tmp, points); });
  }
  return report;
}

std::vector<double> run_spectrum(const std::vector<fs::path>& wavs, const FramingSpec& framing,
                                 std::size_t nfft, const fs::path& csv) {
  if (wavs.empty()) throw Error(Errc::kInvalidArgument, "no input files for spectrum");
  std::vector<double> total;
  double weight = 0.0;
  int rate = 0;
  for (const auto& p : wavs) {
    const Waveform w = read_wav(p);
    if (rate != 0 && w.sample_rate != rate) {
      throw Error(Errc::kSampleRateMismatch, p.string() + " has a different sample rate");
    }
    rate = w.sample_rate;
    const std::vector<double> s = avg_magnitude_spectrum(w, framing, nfft);
    const double frames = static_cast<double>(frame_count(
        w.samples.size(), framing.frame_samples(rate), framing.hop_samples(rate)));
    if (total.empty()) total.assign(s.size(), 0.0);
    for (std::size_t k = 0; k < s.size(); ++k) total[k] += frames * s[k];
    weight += frames;
  }
  for (double& v : total) v /= weight;
  if (!csv.empty()) {
    std::ostringstream os;
    os << "freq_hz,magnitude\n";
    char line[96];
    for (std::size_t k = 0; k < total.size(); ++k) {
      std::snprintf(line, sizeof(line), "%.6f,%.17g\n",
                    static_cast<double>(k) * rate / static_cast<double>(nfft), total[k]);
      os << line;
    }
    ensure_parent(csv);
    write_text(csv, os.str());
  }
  return total;
}

}  // namespace sadkit::pipeline
