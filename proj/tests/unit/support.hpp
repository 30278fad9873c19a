// Copyright 2026 The nelsonlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared helpers for the unit tests: small grids, random data and brute-force oracles.
#ifndef NELSON_TESTS_SUPPORT_HPP
#define NELSON_TESTS_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "nelson/common.hpp"
#include "nelson/lattice.hpp"

namespace testing {

using nelson::cplx;
using nelson::CVector;

inline nelson::GridConfig classical_grid() { return nelson::GridConfig{}; }

inline nelson::GridConfig desk_grid() {
  nelson::GridConfig g;
  g.points = 3;
  g.boson_mass = 0.0;
  g.cutoff = 1.0;
  g.exclude_zero_mode = true;
  return g;
}

inline CVector random_vector(std::size_t n, unsigned seed, bool normalize = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CVector v(static_cast<Eigen::Index>(n));
  for (auto& z : v) z = cplx(g(rng), g(rng));
  if (normalize) v /= v.norm();
  return v;
}

/// Direct O(M^2d) sums: sign -1 gives (F f)(k) = M^{-d/2} sum_x e^{-i k.x} f(x) indexed by mode,
/// sign +1 gives (F^{-1} g)(x) = M^{-d/2} sum_k e^{i k.x} g(k) indexed by node.
inline CVector direct_dft(const nelson::ModeGrid& grid, const CVector& f, int sign = -1) {
  const std::size_t n = grid.size();
  const double norm = std::pow(static_cast<double>(grid.points()), -0.5 * grid.dimension());
  CVector out = CVector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto kv = grid.momentum(k);
    for (std::size_t x = 0; x < n; ++x) {
      const auto xv = grid.position(x);
      const cplx e = std::exp(cplx(0.0, sign * (kv[0] * xv[0] + kv[1] * xv[1] + kv[2] * xv[2])));
      if (sign < 0)
        out[static_cast<Eigen::Index>(k)] += e * f[static_cast<Eigen::Index>(x)];
      else
        out[static_cast<Eigen::Index>(x)] += e * f[static_cast<Eigen::Index>(k)];
    }
  }
  return out * norm;
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace testing

#endif  // NELSON_TESTS_SUPPORT_HPP
