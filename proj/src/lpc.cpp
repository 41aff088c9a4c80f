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


#include "sadkit/lpc.hpp"

#include <cmath>
#include <numbers>

#include "sadkit/error.hpp"

namespace sadkit::lpc {

namespace {

// For a symmetric polynomial c_0..c_n (n even), returns the real function
// e^{j w n/2} C(e^{jw}) = c_{n/2} + 2 sum_{k=1}^{n/2} c_{n/2-k} cos(k w).
double symmetric_on_circle(const std::vector<double>& c, double w) {
  const std::size_t half = (c.size() - 1) / 2;
  double v = c[half];
  for (std::size_t k = 1; k <= half; ++k) {
    v += 2.0 * c[half - k] * std::cos(static_cast<double>(k) * w);
  }
  return v;
}

// Roots in (0, pi) of a cosine series, scanning `steps` cells.
std::vector<double> roots(const std::vector<double>& c, int steps, double tol) {
  std::vector<double> out;
  const double h = std::numbers::pi / steps;
  double lo = 0.0;
  double flo = symmetric_on_circle(c, lo);
  for (int i = 1; i <= steps; ++i) {
    double hi = i * h;
    double fhi = symmetric_on_circle(c, hi);
    if (flo == 0.0) {
      if (lo > 0.0) out.push_back(lo);
    } else if ((flo < 0.0) != (fhi < 0.0) && fhi != 0.0) {
      double a = lo, b = hi, fa = flo;
      while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        const double fm = symmetric_on_circle(c, mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      out.push_back(0.5 * (a + b));
    }
    lo = hi;
    flo = fhi;
  }
  return out;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> x, int order) {
  std::vector<double> r(static_cast<std::size_t>(order) + 1, 0.0);
  for (int lag = 0; lag <= order; ++lag) {
    double acc = 0.0;
    for (std::size_t i = static_cast<std::size_t>(lag); i < x.size(); ++i) {
      acc += x[i] * x[i - static_cast<std::size_t>(lag)];
    }
    r[static_cast<std::size_t>(lag)] = acc;
  }
  return r;
}

LpcResult levinson_durbin(std::span<const double> r, int order) {
  if (order < 1 || r.size() < static_cast<std::size_t>(order) + 1) {
    throw Error(Errc::kInvalidArgument, "autocorrelation too short for LPC order");
  }
  LpcResult res;
  res.a.assign(static_cast<std::size_t>(order) + 1, 0.0);
  res.a[0] = 1.0;
  res.reflection.assign(static_cast<std::size_t>(order), 0.0);
  double err = r[0];
  if (!(err > 0.0)) {
    res.error = 0.0;
    return res;
  }
  std::vector<double> prev(res.a);
  for (int i = 1; i <= order; ++i) {
    double acc = r[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j) {
      acc += prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(i - j)];
    }
    const double k = -acc / err;
    res.reflection[static_cast<std::size_t>(i - 1)] = k;
    for (int j = 1; j < i; ++j) {
      res.a[static_cast<std::size_t>(j)] =
          prev[static_cast<std::size_t>(j)] + k * prev[static_cast<std::size_t>(i - j)];
    }
    res.a[static_cast<std::size_t>(i)] = k;
    err *= (1.0 - k * k);
    if (!(err > 0.0)) {
      // Singular autocorrelation; stop at the last stable order.
      err = 0.0;
      for (int j = i + 1; j <= order; ++j) res.a[static_cast<std::size_t>(j)] = 0.0;
      break;
    }
    prev = res.a;
  }
  res.error = err;
  return res;
}

std::optional<std::vector<double>> lpc_to_lsf(std::span<const double> a,
                                              double tol) {
  const std::size_t p = a.size() - 1;
  if (p < 2 || p % 2 != 0) {
    throw Error(Errc::kInvalidArgument, "LSF conversion needs an even LPC order");
  }
  // P(z) = A(z) + z^-(p+1) A(1/z), Q(z) = A(z) - z^-(p+1) A(1/z); divide out
  // the trivial roots at z = -1 and z = +1 to get two degree-p symmetric
  // polynomials.
  std::vector<double> sum(p + 2, 0.0), diff(p + 2, 0.0);
  for (std::size_t i = 0; i <= p + 1; ++i) {
    const double fwd = i <= p ? a[i] : 0.0;
    const double rev = i >= 1 ? a[p + 1 - i] : 0.0;
    sum[i] = fwd + rev;
    diff[i] = fwd - rev;
  }
  std::vector<double> f1(p + 1), f2(p + 1);
  f1[0] = sum[0];
  f2[0] = diff[0];
  for (std::size_t i = 1; i <= p; ++i) {
    f1[i] = sum[i] - f1[i - 1];   // divide by (1 + z^-1)
    f2[i] = diff[i] + f2[i - 1];  // divide by (1 - z^-1)
  }
  for (int steps : {512, 4096, 32768}) {
    auto r1 = roots(f1, steps, tol);
    auto r2 = roots(f2, steps, tol);
    if (r1.size() == p / 2 && r2.size() == p / 2) {
      std::vector<double> lsf;
      lsf.reserve(p);
      for (std::size_t i = 0; i < p / 2; ++i) {
        lsf.push_back(r1[i]);
        lsf.push_back(r2[i]);
      }
      bool ordered = true;
      for (std::size_t i = 1; i < p; ++i) ordered &= lsf[i] > lsf[i - 1];
      if (ordered) return lsf;
    }
  }
  return std::nullopt;
}

}  // namespace sadkit::lpc
