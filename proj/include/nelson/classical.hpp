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

#ifndef NELSON_CLASSICAL_HPP
#define NELSON_CLASSICAL_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "nelson/common.hpp"
#include "nelson/lattice.hpp"

namespace nelson {

/// Solution of the classical Schroedinger/Klein-Gordon system at time t.
/// u lives on position nodes, alpha on the a-mode slots of the grid.
struct ClassicalState {
  double t = 0.0;
  CVector u;
  CVector alpha;
};

/// Time derivative (du/dt, dalpha/dt) packed like a ClassicalState.
struct ClassicalRate {
  CVector du;
  CVector dalpha;
};

/// Sampled classical solution with cubic Hermite interpolation between samples.
struct Trajectory {
  std::vector<ClassicalState> states;
  std::vector<ClassicalRate> rates;
  double max_charge_drift = 0.0;  // max_t | ||u(t)|| - ||u(0)|| | / ||u(0)||

  double start() const { return states.front().t; }
  double end() const { return states.back().t; }
  bool covers(double t) const;
  /// Throws ConfigError outside [start, end].
  ClassicalState at(double t) const;
  ClassicalRate rate_at(double t) const;
};

/// Real field A on position nodes: inverse transform of (2 omega)^{-1/2} chi (alpha(k) + conj alpha(-k)).
RVector build_A(const ModeGrid& grid, const CVector& alpha);
/// Multiplication potential acting on u: c_chi (F^{-1}chi * A) = c_chi M^{d/2} A.
RVector potential(const ModeGrid& grid, const CVector& alpha);
/// Source in the alpha equation on a-mode slots: f0(k) sum_x e^{-ikx} |u(x)|^2.
CVector source(const ModeGrid& grid, const CVector& u);
ClassicalRate rhs(const ModeGrid& grid, const ClassicalState& state);
double charge(const CVector& u);

ClassicalState step_strang(const ModeGrid& grid, const ClassicalState& state, double dt);

struct SolveOptions {
  enum class Method { strang, dopri };
  Method method = Method::strang;
  double dt = 1e-3;
  std::size_t store_every = 1;
  double max_charge_drift = 1e-6;
  double rtol = 1e-12;  // dopri only
  double atol = 1e-14;  // dopri only
};

/// Integrates from state.t to state.t + T. For the Strang method dt must divide T.
/// Throws NumericalError when the charge drift exceeds options.max_charge_drift.
Trajectory solve(const ModeGrid& grid, const ClassicalState& initial, double T, const SolveOptions& options);

struct PicardOptions {
  double tol = 1e-10;
  std::size_t max_iter = 200;
  std::size_t intervals = 2000;  // trapezoid intervals on [0, T]
};

struct PicardResult {
  Trajectory trajectory;
  std::size_t iterations = 0;
  double contraction = 0.0;  // largest ratio of successive sup-norm increments
  std::vector<double> increments;
};

/// Fixed point of the Duhamel map in the interaction picture, started from free
/// evolution. Throws NumericalError when the increments stop contracting.
PicardResult picard_solve(const ModeGrid& grid, const ClassicalState& initial, double T,
                          const PicardOptions& options);

/// Free evolution of both fields (kinetic phases for u, e^{-i omega t} for alpha).
ClassicalState free_evolve(const ModeGrid& grid, const ClassicalState& state, double t);

/// (u, alpha) -> (conj u, conj alpha(-k)). Evolving the image forward undoes a forward evolution.
ClassicalState time_reverse(const ModeGrid& grid, const ClassicalState& state);

struct ThetaFamily {
  ClassicalState base;
  std::vector<double> thetas;
  std::vector<Trajectory> members;
};

/// One trajectory per theta_j = 2 pi j / n_theta with alpha_0 replaced by e^{-i theta_j} alpha_0.
ThetaFamily solve_theta_family(const ModeGrid& grid, const ClassicalState& base, std::size_t n_theta,
                               double T, const SolveOptions& options, std::size_t jobs = 1);

/// CSV with columns t, Re/Im of each u node, Re/Im of each alpha slot.
void write_trajectory_csv(std::ostream& out, const ModeGrid& grid, const Trajectory& trajectory);

}  // namespace nelson

#endif  // NELSON_CLASSICAL_HPP
