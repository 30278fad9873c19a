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

#ifndef NELSON_STATES_HPP
#define NELSON_STATES_HPP

#include <cstddef>

#include "nelson/fock.hpp"

namespace nelson {

/// P(N > cap) for N ~ Poisson(mean).
double poisson_tail(double mean, std::size_t cap);
/// Smallest cap with poisson_tail(mean, cap) <= tolerance.
std::size_t required_cap(double mean, double tolerance);
/// Squared norm of C(f, g) Omega outside the caps, with ||f||^2 = psi_mean and ||g||^2 = a_mean.
double coherent_tail(double psi_mean, double a_mean, std::size_t psi_cap, std::size_t a_cap);

struct CoherentState {
  QuantumState state;
  double tail = 0.0;
};

/// Closed-form C(f, g) Omega: amplitude e^{-(||f||^2 + ||g||^2)/2} prod f_i^{n_i}/sqrt(n_i!) prod g_j^{m_j}/sqrt(m_j!).
/// Throws ConfigError with the required caps when the tail exceeds `tail_tolerance`.
CoherentState coherent_amplitudes(const BasisPtr& basis, const CVector& f, const CVector& g,
                                  double tail_tolerance = 1e-12);

/// || C*(f, g) b(gamma-bar) C(f, g) state - b(gamma-bar) state - <gamma, shift> state ||
/// for b = a (shift g) or psi (shift f). Evaluated through matrix-exponential Weyl operators.
double weyl_shift_check(Species species, const CVector& f, const CVector& g, const CVector& gamma,
                        const QuantumState& state);

struct StateSpec {
  enum class Family { Lambda, Psi, Theta };
  Family family = Family::Lambda;
  CVector u0;      // psi-mode amplitudes, norm 1
  CVector alpha0;  // a-mode amplitudes, norm 1
  double lambda = 1.0;
  double tail_tolerance = 1e-12;
};

/// Lambda = C(sqrt(i) u0, sqrt(j) alpha0) Omega, Psi = u0^{(x) i} (x) C(sqrt(j) alpha0) Omega,
/// Theta = u0^{(x) i} (x) alpha0^{(x) j}, with i = j = lambda^{-2} (an integer for Psi and Theta).
QuantumState build_state(const BasisPtr& basis, const StateSpec& spec);

/// i = lambda^{-2} as an integer; throws when it is not one.
std::size_t particle_number(double lambda);

/// sqrt(x!) / (e^{-x/2} x^{x/2}) via log-gamma.
double d_factor(double x);

struct ThetaIdentity {
  double projection_residual = 0.0;  // || Theta - d^2 P_x P_x C Omega ||
  double quadrature_residual = 0.0;  // || Theta - d^2 P_x (1/n) sum_j e^{i x theta_j} C(theta_j) Omega ||
  double tail = 0.0;
  std::size_t n_theta = 0;
  double residual() const { return std::max(projection_residual, quadrature_residual); }
};

/// Both sides of Theta = d_x^2 (N1)_x (N2)_x C(u0/lambda, alpha0/lambda) Omega and of its
/// theta-integral form with weight e^{i x theta}, x = lambda^{-2}.
ThetaIdentity theta_identity_check(const BasisPtr& basis, const CVector& u0, const CVector& alpha0, double lambda,
                                   std::size_t n_theta);
/// Smallest even n_theta >= 8 x such that the trapezoid rule does not alias sector x
/// onto another sector 0..a_cap.
std::size_t alias_free_theta_count(std::size_t x, std::size_t a_cap);

/// || P_1 C*(u0/lambda, e^{-i theta} alpha0/lambda) Theta ||, evaluated species by species with
/// caps 2 lambda^{-2} + extra.
double displaced_one_particle_residual(const CVector& u0, const CVector& alpha0, double lambda, double theta,
                                       std::size_t extra = 40);

}  // namespace nelson

#endif  // NELSON_STATES_HPP
