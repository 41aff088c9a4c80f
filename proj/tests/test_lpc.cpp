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

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sadkit/lpc.hpp"
#include "testing.hpp"

using namespace sadkit;

namespace {

// Angles in (0, pi) of the unit-circle roots of P(z) = A(z) + z^-(p+1) A(1/z)
// and Q(z) = A(z) - z^-(p+1) A(1/z), from companion-matrix eigenvalues.
std::vector<double> lsf_oracle(const std::vector<double>& a) {
  const std::size_t p = a.size() - 1;
  std::vector<double> out;
  for (double sign : {1.0, -1.0}) {
    // coefficients of z^(p+1) * P(z) in ascending powers of z
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 2));
    for (std::size_t i = 0; i <= p; ++i) {
      c(static_cast<Eigen::Index>(p + 1 - i)) += a[i];
      c(static_cast<Eigen::Index>(i)) += sign * a[i];
    }
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(c);
    for (Eigen::Index k = 0; k < solver.roots().size(); ++k) {
      const double ang = std::arg(solver.roots()(k));
      if (ang > 1e-9 && ang < std::numbers::pi - 1e-9) out.push_back(ang);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("lpc") {

TEST_CASE("autocorrelation") {
  const std::vector<double> x{1, 2, 3};
  const auto r = lpc::autocorrelation(x, 2);
  CHECK(r == std::vector<double>{14, 8, 3});
}

TEST_CASE("Levinson-Durbin solves the normal equations") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto x = testing::gaussian_noise(400, 1.0, rng());
    std::vector<double> y(x.size());
    // colour it so the predictor is non-trivial
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + (i ? 0.9 * y[i - 1] : 0.0);
    const int p = 10;
    const auto r = lpc::autocorrelation(y, p);
    const auto res = lpc::levinson_durbin(r, p);
    Eigen::MatrixXd R(p, p);
    Eigen::VectorXd rhs(p);
    for (int i = 0; i < p; ++i) {
      rhs(i) = -r[static_cast<std::size_t>(i + 1)];
      for (int j = 0; j < p; ++j) R(i, j) = r[static_cast<std::size_t>(std::abs(i - j))];
    }
    const Eigen::VectorXd direct = R.ldlt().solve(rhs);
    REQUIRE(res.a.size() == static_cast<std::size_t>(p + 1));
    CHECK(res.a[0] == 1.0);
    for (int i = 0; i < p; ++i) CHECK(res.a[static_cast<std::size_t>(i + 1)] == doctest::Approx(direct(i)).epsilon(1e-8));
    CHECK(res.reflection[0] == doctest::Approx(-r[1] / r[0]));
    for (double k : res.reflection) CHECK(std::abs(k) < 1.0);
    CHECK(res.error > 0.0);
  }
}

TEST_CASE("zero energy gives the identity predictor") {
  const std::vector<double> r(11, 0.0);
  const auto res = lpc::levinson_durbin(r, 10);
  CHECK(res.a[0] == 1.0);
  for (std::size_t i = 1; i < res.a.size(); ++i) CHECK(res.a[i] == 0.0);
}

TEST_CASE("LSFs match polynomial roots and interleave") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto x = testing::gaussian_noise(320, 1.0, rng());
    std::vector<double> y(x.size());
    const double c = 0.5 + 0.45 * static_cast<double>(t % 10) / 10.0;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + (i ? c * y[i - 1] : 0.0) - (i > 1 ? 0.3 * y[i - 2] : 0.0);
    const auto res = lpc::levinson_durbin(lpc::autocorrelation(y, 10), 10);
    const auto lsf = lpc::lpc_to_lsf(res.a);
    REQUIRE(lsf.has_value());
    const auto oracle = lsf_oracle(res.a);
    REQUIRE(oracle.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(std::abs((*lsf)[i] - oracle[i]) < 1e-6);
      if (i) CHECK((*lsf)[i] > (*lsf)[i - 1]);
    }
    CHECK(lsf->front() > 0.0);
    CHECK(lsf->back() < std::numbers::pi);
  }
}

TEST_CASE("flat predictor has evenly spaced LSFs") {
  std::vector<double> a(11, 0.0);
  a[0] = 1.0;
  const auto lsf = lpc::lpc_to_lsf(a);
  REQUIRE(lsf.has_value());
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK((*lsf)[i] == doctest::Approx(static_cast<double>(i + 1) * std::numbers::pi / 11.0).epsilon(1e-7));
  }
}

}  // TEST_SUITE
