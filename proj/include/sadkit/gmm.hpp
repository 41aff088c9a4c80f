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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sadkit/matrix.hpp"

namespace sadkit::gmm {

// Diagonal-covariance mixture. Used for the UBM, for MAP-adapted speaker
// models and for the two-component log-energy model.
struct GmmModel {
  Eigen::VectorXd weights;
  RowMatrix means;      // M x D
  RowMatrix variances;  // M x D
  std::string gender;

  int num_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  // Throws kInvalidArgument on shape mismatch, weights off the simplex or
  // non-positive variances.
  void validate() const;
};

struct EmConfig {
  int max_iters = 50;
  // EM iterations run after each split of the staged UBM schedule.
  int stage_iters = 4;
  double loglik_rel_tol = 1e-5;
  // Floor = max(factor * per-dimension data variance, min_variance).
  double variance_floor_factor = 0.01;
  double min_variance = 1e-10;
  std::uint64_t rng_seed = 0;
  double split_delta = 0.01;
  int kmeans_max_iters = 50;
  double kmeans_rel_tol = 1e-6;
  int threads = 1;

  void validate() const;
};

struct MapConfig {
  double relevance_factor = 14.0;
};

struct EmTrace {
  // Total data log-likelihood before the first iteration and after each
  // subsequent one.
  std::vector<double> loglik;
};

struct VqTrace {
  // Mean weighted squared distortion after each k-means assignment,
  // concatenated across split stages; stage_begin marks where each stage
  // starts.
  std::vector<double> distortion;
  std::vector<std::size_t> stage_begin;
};

// log sum_m w_m N(x; mu_m, diag var_m).
double loglik(const GmmModel& model, std::span<const double> x);

// log(w_m) + log N(x; mu_m, var_m) for every m.
std::vector<double> component_log_densities(const GmmModel& model,
                                            std::span<const double> x);

// Sum of per-frame log-likelihoods (compensated summation).
double total_loglik(const GmmModel& model, const RowMatrix& data,
                    int threads = 1);

Eigen::VectorXd variance_floor(const RowMatrix& data, const EmConfig& config);

// Binary-splitting VQ: start from the global mean, split every centroid in
// two along a seeded random direction, refine with k-means, repeat until
// target_components cells. target_components must be a power of two.
GmmModel split_vq_init(const RowMatrix& data, int target_components,
                       const EmConfig& config, VqTrace* trace = nullptr);

// EM until the relative log-likelihood gain drops below the tolerance or
// max_iters is reached; variances floored at every M-step.
GmmModel em_train(const GmmModel& init, const RowMatrix& data,
                  const EmConfig& config, EmTrace* trace = nullptr);

// Fixed number of EM iterations, no convergence test.
GmmModel em_iterate(const GmmModel& init, const RowMatrix& data,
                    const EmConfig& config, int iterations,
                    EmTrace* trace = nullptr);

// Full UBM recipe: split, k-means, a few EM iterations per stage, then EM to
// tolerance at the final size.
GmmModel train_ubm(const RowMatrix& data, int components,
                   const EmConfig& config, EmTrace* trace = nullptr);

// Mean-only MAP adaptation; weights and variances are copied from the UBM.
GmmModel map_adapt(const GmmModel& ubm, const RowMatrix& data,
                   const MapConfig& config);

// Average per-frame log-likelihood ratio using, for each frame, only the
// top_c UBM components. Both sums run over the same component subset.
double topc_llr(const GmmModel& ubm, const GmmModel& target,
                const RowMatrix& data, int top_c = 5);

// Exact average log-likelihood ratio over all components.
double full_llr(const GmmModel& ubm, const GmmModel& target,
                const RowMatrix& data);

// Binary model file, little-endian:
//   "SKGM" u32 version u32 M u32 D str gender u64 config_hash
//   f64 weights[M] f64 means[M*D] f64 variances[M*D]
// (str = u32 length + bytes).
void write_model(const std::filesystem::path& path, const GmmModel& model,
                 std::uint64_t config_hash);

struct LoadedModel {
  GmmModel model;
  std::uint64_t config_hash = 0;
};
LoadedModel read_model(const std::filesystem::path& path);

}  // namespace sadkit::gmm
