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
#include <cmath>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "sadkit/error.hpp"
#include "sadkit/gmm.hpp"
#include "sadkit/sad.hpp"

namespace sadkit::sad {

namespace {

double percentile(std::vector<double> v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

double log_weighted_density(double x, double w, double mu, double var) {
  return std::log(w) - 0.5 * std::log(2.0 * std::numbers::pi * var) -
         (x - mu) * (x - mu) / (2.0 * var);
}

gmm::GmmModel two_component(double mu1, double mu2, double var) {
  gmm::GmmModel g;
  g.weights = Eigen::VectorXd::Constant(2, 0.5);
  g.means.resize(2, 1);
  g.means << mu1, mu2;
  g.variances = RowMatrix::Constant(2, 1, var);
  return g;
}

enum class FitStatus { kOk, kCollapsed, kCoincident };

FitStatus check_fit(const gmm::GmmModel& g, double floor) {
  if (g.variances(0, 0) <= floor * (1.0 + 1e-6) ||
      g.variances(1, 0) <= floor * (1.0 + 1e-6)) {
    return FitStatus::kCollapsed;
  }
  const double scale = std::max({1.0, std::abs(g.means(0, 0)), std::abs(g.means(1, 0))});
  if (std::abs(g.means(0, 0) - g.means(1, 0)) <= 1e-9 * scale) {
    return FitStatus::kCoincident;
  }
  return FitStatus::kOk;
}

}  // namespace

double equal_density_threshold(double w1, double mu1, double var1, double w2,
                               double mu2, double var2, bool* no_crossing) {
  if (!(mu1 < mu2) || !(var1 > 0.0) || !(var2 > 0.0) || !(w1 > 0.0) ||
      !(w2 > 0.0)) {
    throw Error(Errc::kDegenerate,
                "equal-density threshold needs mu1 < mu2 and positive weights "
                "and variances");
  }
  // Positive where the noise component dominates.
  auto f = [&](double x) {
    return log_weighted_density(x, w1, mu1, var1) -
           log_weighted_density(x, w2, mu2, var2);
  };
  if (no_crossing) *no_crossing = false;
  constexpr int kCells = 1024;
  const double h = (mu2 - mu1) / kCells;
  double lo = mu1;
  double flo = f(lo);
  for (int i = 1; i <= kCells; ++i) {
    const double hi = i == kCells ? mu2 : mu1 + i * h;
    const double fhi = f(hi);
    if (flo >= 0.0 && fhi < 0.0) {
      double a = lo, b = hi;
      while (b - a > 1e-7) {
        const double mid = 0.5 * (a + b);
        if (f(mid) >= 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    lo = hi;
    flo = fhi;
  }
  if (no_crossing) *no_crossing = true;
  // One component dominates the whole interval.
  return f(mu2) >= 0.0 ? mu2 : mu1;
}

BiGaussianModel fit_bigaussian(std::span<const double> log_energies,
                               const BiGaussianConfig& config) {
  if (log_energies.size() < 10) {
    throw Error(Errc::kTooShort, "bi-Gaussian fit needs at least 10 frames");
  }
  std::vector<double> values(log_energies.begin(), log_energies.end());
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw Error(Errc::kDegenerate, "log-energies have zero variance");
  }

  RowMatrix data(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    data(static_cast<Eigen::Index>(i), 0) = values[i];
  }
  gmm::EmConfig em;
  em.max_iters = config.max_iters;
  em.loglik_rel_tol = config.loglik_rel_tol;
  em.variance_floor_factor = 0.0;
  em.min_variance = config.variance_floor;

  const double p10 = percentile(values, 0.10);
  const double p90 = percentile(values, 0.90);
  gmm::GmmModel fit = gmm::em_train(two_component(p10, p90, var), data, em);
  FitStatus status = check_fit(fit, config.variance_floor);
  if (status != FitStatus::kOk) {
    spdlog::debug("bi-Gaussian fit degenerate; refitting from a perturbed start");
    std::mt19937_64 rng(config.rng_seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double sd = std::sqrt(var);
    const double m1 = p10 - 0.25 * sd * u(rng);
    const double m2 = p90 + 0.25 * sd * u(rng);
    fit = gmm::em_train(two_component(m1, m2, var * (0.5 + u(rng))), data, em);
    status = check_fit(fit, config.variance_floor);
  }
  if (status == FitStatus::kCollapsed) {
    throw Error(Errc::kNumerical,
                "bi-Gaussian EM collapsed a component onto the variance floor");
  }
  if (status == FitStatus::kCoincident) {
    throw Error(Errc::kDegenerate, "bi-Gaussian components have equal means");
  }

  const int lo = fit.means(0, 0) < fit.means(1, 0) ? 0 : 1;
  const int hi = 1 - lo;
  BiGaussianModel m;
  m.w1 = fit.weights(lo);
  m.w2 = fit.weights(hi);
  m.mu1 = fit.means(lo, 0);
  m.mu2 = fit.means(hi, 0);
  m.var1 = fit.variances(lo, 0);
  m.var2 = fit.variances(hi, 0);
  m.theta = equal_density_threshold(m.w1, m.mu1, m.var1, m.w2, m.mu2, m.var2,
                                    &m.no_crossing);
  return m;
}

SpeechMask sad_ubgme(std::span<const double> log_energies,
                     const BiGaussianConfig& config) {
  const BiGaussianModel model = fit_bigaussian(log_energies, config);
  SpeechMask m;
  m.decisions.reserve(log_energies.size());
  for (double e : log_energies) m.decisions.push_back(e > model.theta ? 1 : 0);
  return m;
}

}  // namespace sadkit::sad
