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


// Linear prediction helpers for the G.729B-style detector.

#pragma once

#include <optional>
#include <span>
#include <vector>

namespace sadkit::lpc {

// r[0..order] of x (biased, no normalization).
std::vector<double> autocorrelation(std::span<const double> x, int order);

struct LpcResult {
  // a[0] = 1; prediction filter A(z) = sum a_i z^-i.
  std::vector<double> a;
  // k[i] is the reflection coefficient produced at order i + 1, with the
  // sign convention of A(z) (k[0] = -r[1]/r[0]).
  std::vector<double> reflection;
  double error = 0.0;
};

// Levinson-Durbin recursion. A zero-energy input yields A(z) = 1.
LpcResult levinson_durbin(std::span<const double> r, int order);

// Line spectral frequencies in radians, strictly increasing in (0, pi),
// located as roots of the symmetric / antisymmetric polynomials by grid
// search followed by bisection to `tol` rad. nullopt if fewer than `order`
// roots were isolated (only for a non-minimum-phase A(z)). Order must be
// even.
std::optional<std::vector<double>> lpc_to_lsf(std::span<const double> a,
                                              double tol = 1e-7);

}  // namespace sadkit::lpc
