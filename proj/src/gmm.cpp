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


#include "sadkit/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "detail/binary_io.hpp"
#include "detail/parallel.hpp"
#include "sadkit/error.hpp"

namespace sadkit::gmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr Eigen::Index kChunk = 2048;

// Per-component constants so that evaluating a frame is one pass over M x D.
struct Prepared {
  const RowMatrix* means = nullptr;
  RowMatrix inv_var;
  Eigen::VectorXd log_const;

  explicit Prepared(const GmmModel& m) : means(&m.means) {
    inv_var = m.variances.cwiseInverse();
    log_const.resize(m.num_components());
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (int c = 0; c < m.num_components(); ++c) {
      const double w = m.weights(c);
      log_const(c) = (w > 0.0 ? std::log(w) : kNegInf) -
                     0.5 * (m.dim() * log2pi +
                            m.variances.row(c).array().log().sum());
    }
  }

  double component(int c, const double* x) const {
    if (log_const(c) == kNegInf) return kNegInf;
    const Eigen::Index d = means->cols();
    Eigen::Map<const Eigen::RowVectorXd> xv(x, d);
    return log_const(c) -
           0.5 * ((xv - means->row(c)).array().square() *
                  inv_var.row(c).array())
                     .sum();
  }

  void all_components(const double* x, double* out) const {
    for (Eigen::Index c = 0; c < log_const.size(); ++c) {
      out[c] = component(static_cast<int>(c), x);
    }
  }
};

double log_sum_exp(const double* v, std::size_t n) {
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, v[i]);
  if (mx == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(v[i] - mx);
  return mx + std::log(acc);
}

void check_dim(const GmmModel& model, Eigen::Index dim) {
  if (dim != model.dim()) {
    throw Error(Errc::kDimensionMismatch,
                "feature dimension " + std::to_string(dim) +
                    " does not match model dimension " +
                    std::to_string(model.dim()));
  }
}

struct Stats {
  Eigen::VectorXd occupancy;
  RowMatrix first;
  RowMatrix second;
  double loglik = 0.0;

  Stats(int m, int d)
      : occupancy(Eigen::VectorXd::Zero(m)),
        first(RowMatrix::Zero(m, d)),
        second(RowMatrix::Zero(m, d)) {}
};

// Posterior statistics of `data` under `model`. Chunks are reduced in a
// fixed order, so the result does not depend on the thread count.
Stats accumulate(const GmmModel& model, const RowMatrix& data, int threads,
                 bool want_second) {
  const Prepared prep(model);
  const int m = model.num_components();
  const int d = model.dim();
  const Eigen::Index n = data.rows();
  const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  std::vector<Stats> partial(chunks, Stats(m, d));
  std::vector<double> chunk_ll(chunks, 0.0);

  detail::parallel_for(chunks, threads, [&](std::size_t ci) {
    Stats& s = partial[ci];
    detail::CompensatedSum ll;
    std::vector<double> logp(static_cast<std::size_t>(m));
    const Eigen::Index begin = static_cast<Eigen::Index>(ci) * kChunk;
    const Eigen::Index end = std::min(n, begin + kChunk);
    for (Eigen::Index t = begin; t < end; ++t) {
      const double* x = data.row(t).data();
      prep.all_components(x, logp.data());
      const double total = log_sum_exp(logp.data(), logp.size());
      ll.add(total);
      if (!std::isfinite(total)) continue;
      auto xv = data.row(t);
      for (int c = 0; c < m; ++c) {
        const double g = std::exp(logp[static_cast<std::size_t>(c)] - total);
        if (g < 1e-300) continue;
        s.occupancy(c) += g;
        s.first.row(c) += g * xv;
        if (want_second) s.second.row(c) += g * xv.array().square().matrix();
      }
    }
    chunk_ll[ci] = ll.value();
  });

  Stats out(m, d);
  detail::CompensatedSum ll;
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    out.occupancy += partial[ci].occupancy;
    out.first += partial[ci].first;
    if (want_second) out.second += partial[ci].second;
    ll.add(chunk_ll[ci]);
  }
  out.loglik = ll.value();
  return out;
}

GmmModel maximize(const GmmModel& prev, const Stats& s,
                  const Eigen::VectorXd& floor, Eigen::Index frames) {
  GmmModel next = prev;
  const int m = prev.num_components();
  for (int c = 0; c < m; ++c) {
    const double occ = s.occupancy(c);
    next.weights(c) = occ / static_cast<double>(frames);
    if (occ < 1e-8) continue;  // starved component keeps its shape
    next.means.row(c) = s.first.row(c) / occ;
    for (int k = 0; k < prev.dim(); ++k) {
      const double mu = next.means(c, k);
      next.variances(c, k) = std::max(s.second(c, k) / occ - mu * mu, floor(k));
    }
  }
  const double total = next.weights.sum();
  if (!(total > 0.0)) {
    throw Error(Errc::kNumerical, "EM produced all-zero component weights");
  }
  next.weights /= total;
  return next;
}

Eigen::RowVectorXd column_mean(const RowMatrix& data) {
  return data.colwise().mean();
}

Eigen::RowVectorXd column_variance(const RowMatrix& data) {
  const Eigen::RowVectorXd mu = column_mean(data);
  return (data.rowwise() - mu).array().square().colwise().mean();
}

// Lloyd iterations on variance-normalized data. `centroids` are in the
// normalized space and are updated in place; returns the final assignment.
std::vector<int> kmeans(const RowMatrix& scaled, RowMatrix& centroids,
                        const EmConfig& config, std::mt19937_64& rng,
                        VqTrace* trace) {
  const Eigen::Index n = scaled.rows();
  const Eigen::Index d = scaled.cols();
  const Eigen::Index k = centroids.rows();
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::normal_distribution<double> normal;
  double prev = std::numeric_limits<double>::infinity();

  for (int iter = 0;; ++iter) {
    // argmin_c |x - c|^2 = argmin_c (|c|^2 - 2 x.c)
    const Eigen::VectorXd c_norm = centroids.rowwise().squaredNorm();
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    detail::CompensatedSum distortion;
    for (Eigen::Index begin = 0; begin < n; begin += kChunk) {
      const Eigen::Index rows = std::min(kChunk, n - begin);
      const Eigen::MatrixXd cross =
          scaled.middleRows(begin, rows) * centroids.transpose();
      for (Eigen::Index r = 0; r < rows; ++r) {
        Eigen::Index best = 0;
        double best_v = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
          const double v = c_norm(c) - 2.0 * cross(r, c);
          if (v < best_v) {
            best_v = v;
            best = c;
          }
        }
        const Eigen::Index t = begin + r;
        assign[static_cast<std::size_t>(t)] = static_cast<int>(best);
        ++counts[static_cast<std::size_t>(best)];
        distortion.add((scaled.row(t) - centroids.row(best)).squaredNorm());
      }
    }
    const double dist = distortion.value() / static_cast<double>(n);
    if (trace) trace->distortion.push_back(dist);

    // Centroid update.
    RowMatrix sums = RowMatrix::Zero(k, d);
    for (Eigen::Index t = 0; t < n; ++t) {
      sums.row(assign[static_cast<std::size_t>(t)]) += scaled.row(t);
    }
    const auto largest = static_cast<Eigen::Index>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    bool reseeded = false;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Empty cell: re-split off the most populated cell.
        for (Eigen::Index j = 0; j < d; ++j) {
          centroids(c, j) = centroids(largest, j) + config.split_delta * normal(rng);
        }
        reseeded = true;
      }
    }

    const bool converged =
        std::isfinite(prev) && prev - dist <= config.kmeans_rel_tol * prev;
    prev = dist;
    if ((converged && !reseeded) || iter + 1 >= config.kmeans_max_iters) break;
  }
  return assign;
}

GmmModel cells_to_model(const RowMatrix& data, const std::vector<int>& assign,
                        int k, const Eigen::VectorXd& floor) {
  const Eigen::Index d = data.cols();
  GmmModel g;
  g.weights = Eigen::VectorXd::Zero(k);
  g.means = RowMatrix::Zero(k, d);
  g.variances = RowMatrix::Zero(k, d);
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    const int c = assign[static_cast<std::size_t>(t)];
    g.weights(c) += 1.0;
    g.means.row(c) += data.row(t);
  }
  for (int c = 0; c < k; ++c) {
    if (g.weights(c) > 0) g.means.row(c) /= g.weights(c);
  }
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    const int c = assign[static_cast<std::size_t>(t)];
    g.variances.row(c) += (data.row(t) - g.means.row(c)).array().square().matrix();
  }
  const Eigen::RowVectorXd global_mean = column_mean(data);
  const Eigen::RowVectorXd global_var = column_variance(data);
  for (int c = 0; c < k; ++c) {
    if (g.weights(c) > 0) {
      g.variances.row(c) /= g.weights(c);
    } else {
      spdlog::warn("VQ cell {} ended empty; giving it the global statistics", c);
      g.means.row(c) = global_mean;
      g.variances.row(c) = global_var;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      g.variances(c, j) = std::max(g.variances(c, j), floor(j));
    }
  }
  g.weights /= static_cast<double>(data.rows());
  return g;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void check_training_data(const RowMatrix& data, int components) {
  if (data.rows() == 0 || data.cols() == 0) {
    throw Error(Errc::kInvalidArgument, "empty training data");
  }
  if (!data.allFinite()) {
    throw Error(Errc::kInvalidArgument, "training data contains non-finite values");
  }
  if (data.rows() < components) {
    throw Error(Errc::kInvalidArgument,
                std::to_string(data.rows()) + " frames cannot seed " +
                    std::to_string(components) + " components");
  }
}

}  // namespace

void GmmModel::validate() const {
  const auto m = weights.size();
  if (m == 0 || means.rows() != m || variances.rows() != m ||
      variances.cols() != means.cols() || means.cols() == 0) {
    throw Error(Errc::kInvalidArgument, "GMM parameter shapes are inconsistent");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw Error(Errc::kInvalidArgument, "GMM weights are not on the simplex");
  }
  if (!(variances.array() > 0.0).all() || !means.allFinite() ||
      !variances.allFinite()) {
    throw Error(Errc::kInvalidArgument, "GMM has non-positive or non-finite variances");
  }
}

void EmConfig::validate() const {
  if (!(loglik_rel_tol > 0.0) || !(kmeans_rel_tol > 0.0) ||
      variance_floor_factor < 0.0 || !(min_variance > 0.0) ||
      max_iters < 1 || stage_iters < 0 || kmeans_max_iters < 1 ||
      !(split_delta > 0.0)) {
    throw Error(Errc::kInvalidArgument, "invalid EM configuration");
  }
}

double loglik(const GmmModel& model, std::span<const double> x) {
  check_dim(model, static_cast<Eigen::Index>(x.size()));
  const auto comps = component_log_densities(model, x);
  return log_sum_exp(comps.data(), comps.size());
}

std::vector<double> component_log_densities(const GmmModel& model,
                                            std::span<const double> x) {
  check_dim(model, static_cast<Eigen::Index>(x.size()));
  const Prepared prep(model);
  std::vector<double> out(static_cast<std::size_t>(model.num_components()));
  prep.all_components(x.data(), out.data());
  return out;
}

double total_loglik(const GmmModel& model, const RowMatrix& data, int threads) {
  check_dim(model, data.cols());
  return accumulate(model, data, threads, false).loglik;
}

Eigen::VectorXd variance_floor(const RowMatrix& data, const EmConfig& config) {
  Eigen::VectorXd floor = (config.variance_floor_factor *
                           column_variance(data).array()).matrix().transpose();
  return floor.cwiseMax(config.min_variance);
}

GmmModel split_vq_init(const RowMatrix& data, int target_components,
                       const EmConfig& config, VqTrace* trace) {
  config.validate();
  if (!is_power_of_two(target_components)) {
    throw Error(Errc::kInvalidArgument, "mixture count must be a power of two");
  }
  check_training_data(data, target_components);
  const Eigen::VectorXd floor = variance_floor(data, config);
  const Eigen::RowVectorXd scale =
      column_variance(data).cwiseMax(config.min_variance).cwiseSqrt().cwiseInverse();
  const RowMatrix scaled = data.array().rowwise() * scale.array();

  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal;
  RowMatrix centroids = scaled.colwise().mean();
  std::vector<int> assign(static_cast<std::size_t>(data.rows()), 0);
  while (centroids.rows() < target_components) {
    const Eigen::Index k = centroids.rows();
    RowMatrix split(2 * k, data.cols());
    for (Eigen::Index c = 0; c < k; ++c) {
      // Unit per-dimension std in the normalized space.
      Eigen::RowVectorXd eps(data.cols());
      for (Eigen::Index j = 0; j < eps.size(); ++j) {
        eps(j) = config.split_delta * normal(rng);
      }
      split.row(2 * c) = centroids.row(c) + eps;
      split.row(2 * c + 1) = centroids.row(c) - eps;
    }
    centroids = std::move(split);
    if (trace) trace->stage_begin.push_back(trace->distortion.size());
    assign = kmeans(scaled, centroids, config, rng, trace);
  }
  return cells_to_model(data, assign, target_components, floor);
}

GmmModel em_iterate(const GmmModel& init, const RowMatrix& data,
                    const EmConfig& config, int iterations, EmTrace* trace) {
  config.validate();
  init.validate();
  check_dim(init, data.cols());
  check_training_data(data, 1);
  const Eigen::VectorXd floor = variance_floor(data, config);
  GmmModel model = init;
  for (int it = 0; it < iterations; ++it) {
    const Stats s = accumulate(model, data, config.threads, true);
    if (!std::isfinite(s.loglik)) {
      throw Error(Errc::kNumerical,
                  "non-finite log-likelihood at EM iteration " + std::to_string(it));
    }
    if (trace) trace->loglik.push_back(s.loglik);
    model = maximize(model, s, floor, data.rows());
  }
  if (trace && iterations > 0) {
    trace->loglik.push_back(total_loglik(model, data, config.threads));
  }
  return model;
}

GmmModel em_train(const GmmModel& init, const RowMatrix& data,
                  const EmConfig& config, EmTrace* trace) {
  config.validate();
  init.validate();
  check_dim(init, data.cols());
  check_training_data(data, 1);
  if (data.rows() < 10 * static_cast<Eigen::Index>(init.num_components())) {
    spdlog::warn("EM: only {} frames for {} components", data.rows(),
                 init.num_components());
  }
  const Eigen::VectorXd floor = variance_floor(data, config);
  GmmModel model = init;
  double prev = 0.0;
  for (int it = 0;; ++it) {
    const Stats s = accumulate(model, data, config.threads, true);
    if (!std::isfinite(s.loglik)) {
      throw Error(Errc::kNumerical,
                  "non-finite log-likelihood at EM iteration " + std::to_string(it));
    }
    if (trace) trace->loglik.push_back(s.loglik);
    if (it > 0 && (s.loglik - prev) <= config.loglik_rel_tol * std::abs(prev)) {
      break;
    }
    if (it >= config.max_iters) break;
    prev = s.loglik;
    model = maximize(model, s, floor, data.rows());
  }
  return model;
}

GmmModel train_ubm(const RowMatrix& data, int components,
                   const EmConfig& config, EmTrace* trace) {
  config.validate();
  if (!is_power_of_two(components)) {
    throw Error(Errc::kInvalidArgument, "mixture count must be a power of two");
  }
  check_training_data(data, components);
  const Eigen::VectorXd floor = variance_floor(data, config);
  const Eigen::RowVectorXd scale =
      column_variance(data).cwiseMax(config.min_variance).cwiseSqrt().cwiseInverse();
  const RowMatrix scaled = data.array().rowwise() * scale.array();
  std::mt19937_64 rng(config.rng_seed);
  std::normal_distribution<double> normal;

  GmmModel model = split_vq_init(data, 1, config);
  while (model.num_components() < components) {
    const Eigen::Index k = model.num_components();
    RowMatrix centroids(2 * k, data.cols());
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::RowVectorXd mu = model.means.row(c).array() * scale.array();
      Eigen::RowVectorXd eps(data.cols());
      for (Eigen::Index j = 0; j < eps.size(); ++j) {
        eps(j) = config.split_delta * normal(rng);
      }
      centroids.row(2 * c) = mu + eps;
      centroids.row(2 * c + 1) = mu - eps;
    }
    const auto assign = kmeans(scaled, centroids, config, rng, nullptr);
    model = cells_to_model(data, assign, static_cast<int>(2 * k), floor);
    if (model.num_components() < components) {
      model = em_iterate(model, data, config, config.stage_iters);
    }
    spdlog::debug("UBM stage: {} components", model.num_components());
  }
  return em_train(model, data, config, trace);
}

GmmModel map_adapt(const GmmModel& ubm, const RowMatrix& data,
                   const MapConfig& config) {
  ubm.validate();
  if (!(config.relevance_factor > 0.0)) {
    throw Error(Errc::kInvalidArgument, "relevance factor must be positive");
  }
  if (data.rows() == 0) {
    throw Error(Errc::kInvalidArgument, "MAP adaptation needs at least one frame");
  }
  check_dim(ubm, data.cols());
  const Stats s = accumulate(ubm, data, 1, false);
  GmmModel out = ubm;
  for (int c = 0; c < ubm.num_components(); ++c) {
    const double n = s.occupancy(c);
    if (!(n > 0.0)) continue;
    const double alpha = n / (n + config.relevance_factor);
    for (int k = 0; k < ubm.dim(); ++k) {
      const double prior = ubm.means(c, k);
      const double ml = s.first(c, k) / n;
      const double v = prior + alpha * (ml - prior);
      // Rounding may push v an ulp outside [prior, ml].
      out.means(c, k) = std::clamp(v, std::min(prior, ml), std::max(prior, ml));
    }
  }
  return out;
}

double topc_llr(const GmmModel& ubm, const GmmModel& target,
                const RowMatrix& data, int top_c) {
  const int m = ubm.num_components();
  if (top_c < 1 || top_c > m) {
    throw Error(Errc::kInvalidArgument,
                "top-C of " + std::to_string(top_c) + " with " +
                    std::to_string(m) + " components");
  }
  if (target.num_components() != m || target.dim() != ubm.dim()) {
    throw Error(Errc::kDimensionMismatch, "target model does not match the UBM");
  }
  check_dim(ubm, data.cols());
  if (data.rows() == 0) {
    throw Error(Errc::kInvalidArgument, "cannot score an empty feature matrix");
  }
  const Prepared pu(ubm);
  const Prepared pt(target);
  std::vector<double> ubm_lp(static_cast<std::size_t>(m));
  std::vector<int> order(static_cast<std::size_t>(m));
  std::vector<double> sel_u(static_cast<std::size_t>(top_c));
  std::vector<double> sel_t(static_cast<std::size_t>(top_c));
  detail::CompensatedSum acc;
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    const double* x = data.row(t).data();
    pu.all_components(x, ubm_lp.data());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + top_c, order.end(),
                      [&](int a, int b) {
                        const double va = ubm_lp[static_cast<std::size_t>(a)];
                        const double vb = ubm_lp[static_cast<std::size_t>(b)];
                        return va > vb || (va == vb && a < b);
                      });
    std::sort(order.begin(), order.begin() + top_c);
    for (int i = 0; i < top_c; ++i) {
      const int c = order[static_cast<std::size_t>(i)];
      sel_u[static_cast<std::size_t>(i)] = ubm_lp[static_cast<std::size_t>(c)];
      sel_t[static_cast<std::size_t>(i)] = pt.component(c, x);
    }
    acc.add(log_sum_exp(sel_t.data(), sel_t.size()) -
            log_sum_exp(sel_u.data(), sel_u.size()));
  }
  return acc.value() / static_cast<double>(data.rows());
}

double full_llr(const GmmModel& ubm, const GmmModel& target,
                const RowMatrix& data) {
  check_dim(ubm, data.cols());
  check_dim(target, data.cols());
  if (data.rows() == 0) {
    throw Error(Errc::kInvalidArgument, "cannot score an empty feature matrix");
  }
  return (total_loglik(target, data) - total_loglik(ubm, data)) /
         static_cast<double>(data.rows());
}

void write_model(const std::filesystem::path& path, const GmmModel& model,
                 std::uint64_t config_hash) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write("SKGM", 4);
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_components()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  detail::put_string(out, model.gender);
  detail::put_le<std::uint64_t>(out, config_hash);
  for (Eigen::Index c = 0; c < model.weights.size(); ++c) {
    detail::put_f64(out, model.weights(c));
  }
  for (const RowMatrix* mat : {&model.means, &model.variances}) {
    for (Eigen::Index i = 0; i < mat->size(); ++i) {
      detail::put_f64(out, mat->data()[i]);
    }
  }
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

LoadedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "SKGM") {
    throw Error(Errc::kFormat, path.string() + " is not a model file");
  }
  const auto version = detail::get_le<std::uint32_t>(in, "model version");
  if (version != 1) {
    throw Error(Errc::kFormat, "unsupported model version " + std::to_string(version));
  }
  const auto m = detail::get_le<std::uint32_t>(in, "model size");
  const auto d = detail::get_le<std::uint32_t>(in, "model dim");
  if (m == 0 || d == 0 || m > (1u << 16) || d > (1u << 12)) {
    throw Error(Errc::kFormat, path.string() + ": implausible model shape");
  }
  LoadedModel lm;
  lm.model.gender = detail::get_string(in, "model gender");
  lm.config_hash = detail::get_le<std::uint64_t>(in, "model config hash");
  lm.model.weights.resize(m);
  lm.model.means.resize(m, d);
  lm.model.variances.resize(m, d);
  for (Eigen::Index c = 0; c < lm.model.weights.size(); ++c) {
    lm.model.weights(c) = detail::get_f64(in, "model weights");
  }
  for (RowMatrix* mat : {&lm.model.means, &lm.model.variances}) {
    for (Eigen::Index i = 0; i < mat->size(); ++i) {
      mat->data()[i] = detail::get_f64(in, "model parameters");
    }
  }
  try {
    lm.model.validate();
  } catch (const Error& e) {
    throw Error(Errc::kFormat, path.string() + ": " + e.what());
  }
  return lm;
}

}  // namespace sadkit::gmm
