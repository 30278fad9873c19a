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

#ifndef NELSON_OBSERVABLES_HPP
#define NELSON_OBSERVABLES_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "nelson/classical.hpp"
#include "nelson/fock.hpp"
#include "nelson/lattice.hpp"

namespace nelson {

struct FieldAverage {
  CVector psi;  // <lambda psi_q> on psi-modes
  CVector a;    // <lambda a_k> on a-mode slots
};

/// <state, lambda b state> for every mode of both species.
FieldAverage field_average(const QuantumState& state, double lambda);

/// Elementary-tensor test function g for psi*(q) psi(r) a*(h) a(l): one single-particle
/// vector per factor, psi vectors on psi-modes and a vectors on a-mode slots.
struct NormalOrderSpec {
  std::vector<CVector> psi_create;
  std::vector<CVector> psi_annihilate;
  std::vector<CVector> a_create;
  std::vector<CVector> a_annihilate;

  std::size_t delta() const {
    return psi_create.size() + psi_annihilate.size() + a_create.size() + a_annihilate.size();
  }
  /// Swap creation and annihilation slots and conjugate every factor.
  NormalOrderSpec adjoint() const;
};

/// lambda^delta <state, B state> with B = prod psi*(gbar) prod psi(gbar) prod a*(gbar) prod a(gbar),
/// evaluated as <L, R> where R applies the annihilators to the state and L applies the
/// adjoints of the creators. No operator matrix is formed.
cplx normal_ordered_average(const QuantumState& state, const NormalOrderSpec& spec, double lambda);

/// prod <g, conj u> prod <g, u> prod <g, conj alpha> prod <g, alpha> with u in mode space.
cplx classical_product(const NormalOrderSpec& spec, const CVector& u_hat, const CVector& alpha);
cplx classical_product(const ModeGrid& grid, const NormalOrderSpec& spec, const ClassicalState& state);

struct ThetaAverage {
  cplx value;
  cplx half_grid;  // same average on every other sample
  double change = 0.0;  // |value - half_grid|
};

/// Trapezoid average over the theta family at time t. Throws NumericalError when the
/// refinement change exceeds `tolerance`.
ThetaAverage classical_prediction(const ModeGrid& grid, const NormalOrderSpec& spec, const ThetaFamily& family,
                                  double t, double tolerance = 1e-8);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual of the log-log fit
};

/// Least-squares slope of log(error) against log(lambda).
RateFit rate_fit(const std::vector<double>& lambdas, const std::vector<double>& errors);

/// lambda-sweep record.
struct ExperimentResult {
  std::string name;
  std::vector<double> lambdas;
  std::vector<double> errors;
  bool has_fit = false;
  RateFit fit;
  std::map<std::string, double> diagnostics;
  double runtime_seconds = 0.0;
};

}  // namespace nelson

#endif  // NELSON_OBSERVABLES_HPP
