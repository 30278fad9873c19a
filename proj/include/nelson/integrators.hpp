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

#ifndef NELSON_INTEGRATORS_HPP
#define NELSON_INTEGRATORS_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "nelson/common.hpp"

namespace nelson {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step from the first derivative
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2000000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// dy = f(t, y). The output buffer is sized by the caller.
using OdeRhs = std::function<void(double, const CVector&, CVector&)>;
/// Called at t0 and after every accepted step with (t, y, f(t, y)).
using OdeObserver = std::function<void(double, const CVector&, const CVector&)>;

/// Adaptive Dormand-Prince 5(4) with FSAL. Integrates y from t0 to t1 in place;
/// t1 < t0 integrates backwards. Throws NumericalError when the step budget is
/// exhausted or the step underflows.
OdeStats dopri5(const OdeRhs& f, double t0, double t1, CVector& y, const OdeOptions& options,
                const OdeObserver& observer = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_legendre(std::size_t n);

}  // namespace nelson

#endif  // NELSON_INTEGRATORS_HPP
