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

#ifndef NELSON_PROPAGATE_HPP
#define NELSON_PROPAGATE_HPP

#include <cstddef>
#include <functional>

#include "nelson/classical.hpp"
#include "nelson/fock.hpp"
#include "nelson/hamiltonian.hpp"
#include "nelson/integrators.hpp"
#include "nelson/lattice.hpp"

namespace nelson {

struct PropagatorConfig {
  enum class Method { dense_eig, poly_action };
  Method method = Method::poly_action;
  double tolerance = 1e-12;
  std::size_t max_terms = 200000;  // Chebyshev term budget per call
};

/// exp(-i t H) x by a Chebyshev expansion on a Gershgorin enclosure of the spectrum.
CVector chebyshev_action(const SparseMatrix& h, std::pair<double, double> bounds, const CVector& x, double t,
                         double tolerance, std::size_t max_terms, std::size_t* terms_used = nullptr);
/// exp(-i t H) x through a dense eigendecomposition (dimension <= 2000).
CVector dense_action(const Eigen::MatrixXcd& h, const CVector& x, double t);

QuantumState evolve_full(const OperatorRep& h, const QuantumState& state, double t, const PropagatorConfig& config);
QuantumState evolve_free(const ModeGrid& grid, const QuantumState& state, double t);
QuantumState evolve_diagonal(const RVector& energies, const QuantumState& state, double t);

/// Anti-hermitian Weyl generator psi*(f) - psi(conj f) + a*(g) - a(conj g) times -i,
/// i.e. the hermitian K with C(f, g) = exp(-i K).
OperatorRep weyl_generator(const BasisPtr& basis, const CVector& f, const CVector& g);
/// C(f, g) state; `f` on psi-modes, `g` on a-mode slots.
QuantumState weyl_displace(const CVector& f, const CVector& g, const QuantumState& state,
                           const PropagatorConfig& config = {});

/// y = G(t) x for a hermitian time-dependent generator.
using TimeGenerator = std::function<void(double, const CVector&, CVector&)>;

struct DysonConfig {
  double tolerance = 1e-8;
  std::size_t substeps = 8;
  std::size_t max_refinements = 16;
  std::size_t order = 8;  // highest Dyson term per substep
  std::size_t nodes = 10;  // Gauss-Legendre collocation nodes per substep
};

struct DysonResult {
  CVector series;  // composed truncated Dyson series
  CVector ode;     // adaptive Dormand-Prince
  double discrepancy = 0.0;
  std::size_t substeps = 0;
  double last_term = 0.0;  // largest norm of the highest-order term over all substeps
  OdeStats ode_stats;
};

/// Solves i dX/dt = G(t) X, X(s) = x, to time t (t < s allowed) with both methods.
DysonResult time_ordered(const TimeGenerator& g, const CVector& x, double s, double t, const DysonConfig& config);
/// Only the Dyson-series route.
CVector dyson_series(const TimeGenerator& g, const CVector& x, double s, double t, const DysonConfig& config,
                     std::size_t* substeps = nullptr, double* last_term = nullptr);

/// Interaction-picture fluctuation propagator U2~_nu(t, s) along a classical trajectory.
/// nu <= 0 leaves the sigma cutoff inactive.
class FluctuationPropagator {
 public:
  FluctuationPropagator(const FluctuationGenerator& generator, const ModeGrid& grid, const Trajectory& trajectory,
                        double nu = 0.0);
  TimeGenerator generator() const;
  DysonResult apply(const QuantumState& state, double t, double s, const DysonConfig& config) const;

 private:
  const FluctuationGenerator& gen_;
  const ModeGrid& grid_;
  const Trajectory& traj_;
  RVector sigma_;
};

struct PhaseResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};
/// Lambda(t, s) = -(1/2) lambda^{-2} int_s^t sum_x Phi(x, t') |u(x, t')|^2 dt' with Phi the
/// classical potential, by composite Simpson halving until the estimate is below `tolerance`.
PhaseResult phase_Lambda(const ModeGrid& grid, const Trajectory& trajectory, double t, double s, double lambda,
                         double tolerance = 1e-12);

/// Coherent amplitudes (u_hat / lambda, alpha / lambda) of a classical state.
std::pair<CVector, CVector> coherent_shift(const ModeGrid& grid, const ClassicalState& state, double lambda);

struct WAction {
  QuantumState state;
  double phase = 0.0;
  double coherent_tail = 0.0;  // Poisson tail of the displacements beyond the basis caps
  double norm_defect = 0.0;    // | ||out|| - ||in|| |
};

/// W(t, s) = C*(u(t)/lambda, alpha(t)/lambda) U(t - s) C(u(s)/lambda, alpha(s)/lambda) e^{i Lambda(t, s)}
/// applied on the basis of `h`. Refuses (ConfigError with required caps) when the coherent
/// tail exceeds `tail_threshold`. With `interaction` set, returns U0*(t) W(t, s) U0(s).
WAction build_W_action(const ModeGrid& grid, const OperatorRep& h, const Trajectory& trajectory, double lambda,
                       double t, double s, const QuantumState& state, bool interaction,
                       const PropagatorConfig& config = {}, double tail_threshold = 1e-10);

/// W~(t, s) from its generator U0*(t) H_I U0(t) + V~(t), integrated on the basis of `hi`
/// with adaptive Dormand-Prince. Requires hi to carry the same basis as `generator`.
CVector W_tilde_from_generator(const FluctuationGenerator& generator, const OperatorRep& hi, const ModeGrid& grid,
                               const Trajectory& trajectory, double t, double s, const CVector& x,
                               double tolerance = 1e-10);

/// exp{(|delta|/2)(ln 3 + sqrt(2) c2 I)} with c2 = max(4, 3^{|delta|/2} + 1) and I the
/// time integral of ||v_{--}||.
double hdelta_bound(double delta, double kernel_integral);

}  // namespace nelson

#endif  // NELSON_PROPAGATE_HPP
