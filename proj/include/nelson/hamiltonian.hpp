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

#ifndef NELSON_HAMILTONIAN_HPP
#define NELSON_HAMILTONIAN_HPP

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "nelson/classical.hpp"
#include "nelson/fock.hpp"
#include "nelson/lattice.hpp"

namespace nelson {

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Sparse operator on a FockBasis.
struct OperatorRep {
  BasisPtr basis;
  SparseMatrix matrix;
  bool hermitian = false;

  QuantumState apply(const QuantumState& state) const;
  CVector apply(const CVector& amplitudes) const;
  /// max |A_ij - conj(A_ji)|.
  double hermiticity_residual() const;
  Eigen::MatrixXcd dense() const;
  /// Gershgorin enclosure [lo, hi] of the spectrum (hermitian operators).
  std::pair<double, double> spectral_bounds() const;
  /// Rows "row,col,re,im" in row-major order.
  void write_csv(std::ostream& out) const;
};

/// Diagonal of H0: sum_q |q|^2/(2M) n_psi(q) + sum_k omega(k) n_a(k).
RVector free_energies(const FockBasis& basis, const ModeGrid& grid);
OperatorRep build_H0(const BasisPtr& basis, const ModeGrid& grid);
OperatorRep build_number(const BasisPtr& basis, Species species);

/// lambda sum_{k in chi} sum_q f0(k) [a_k psi*_{q+k} psi_q + h.c.], compressed onto the basis.
OperatorRep build_HI(const BasisPtr& basis, const ModeGrid& grid, double lambda);
OperatorRep build_H(const BasisPtr& basis, const ModeGrid& grid, double lambda);

/// Commutator [A, B] as a sparse matrix.
SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b);

/// Classical data entering the fluctuation generator: alpha on a-mode slots and
/// the momentum amplitudes u_hat = F(u) on psi-modes.
struct FluctuationCoefficients {
  CVector alpha;
  CVector u_hat;
};
FluctuationCoefficients fluctuation_coefficients(const ModeGrid& grid, const ClassicalState& state);

/// Quadratic fluctuation generator V = Y + Y^* with
///   Y = sum_k f0(k) sum_q [ alpha_k psi*_{q+k} psi_q + u_q psi*_{q+k} a_k + u_q psi*_{q-k} a*_k ],
/// which expands to V_0 + V_{--} + V_{-+} + V_{+-} + V_{++}. The time dependence
/// enters only through the coefficients, so the fixed sparse terms are built once.
class FluctuationGenerator {
 public:
  FluctuationGenerator(const BasisPtr& basis, const ModeGrid& grid);

  const BasisPtr& basis() const { return basis_; }
  const RVector& free_energies() const { return energies_; }

  /// y = V x.
  void apply(const FluctuationCoefficients& c, const CVector& x, CVector& y) const;
  /// y = U0*(t) V U0(t) x.
  void apply_interaction(double t, const FluctuationCoefficients& c, const CVector& x, CVector& y) const;
  OperatorRep assemble(const FluctuationCoefficients& c) const;

 private:
  /// One (k, q) term of Y with its coefficient slot and the free energy it adds.
  struct Term {
    bool alpha = false;  // coefficient from alpha (else from u_hat)
    std::size_t coefficient = 0;
    double shift = 0.0;
  };
  void check(const FluctuationCoefficients& c) const;
  /// Per-tag weights: term i gets w_i, its adjoint (tag i + n) gets conj(w_i).
  std::vector<cplx> weights(const FluctuationCoefficients& c, double t, bool rotate) const;
  void multiply(const std::vector<cplx>& w, const CVector& x, CVector& y) const;

  BasisPtr basis_;
  RVector energies_;
  std::vector<Term> terms_;
  std::size_t n_alpha_ = 0, n_u_ = 0;
  std::vector<std::uint32_t> row_start_, cols_, tags_;
  std::vector<double> values_;
};

OperatorRep build_V(const BasisPtr& basis, const ModeGrid& grid, const ClassicalState& state);
/// U0*(t) V(t) U0(t) with t = state.t.
OperatorRep interaction_V(const BasisPtr& basis, const ModeGrid& grid, const ClassicalState& state);

/// Position-momentum kernels v_{##}(x, k) (rows: position nodes, columns: a-mode slots):
/// v_{-+/--} carry conj(u), v_{+-/++} carry u; the second sign selects e^{+ikx} (-) or e^{-ikx} (+).
struct FluctuationKernels {
  Eigen::MatrixXcd mm, mp, pm, pp;
};
FluctuationKernels fluctuation_kernels(const ModeGrid& grid, const CVector& u);
double kernel_norm(const Eigen::MatrixXcd& kernel);

/// C^1 profile equal to 1 on [0, 1] and 0 on [2, inf): 1 - 3 s'^2 + 2 s'^3 with s' = s - 1.
double smooth_cutoff(double s);
/// sigma_nu A sigma_nu with sigma_nu = smooth_cutoff(N / nu).
OperatorRep apply_sigma_cutoff(const OperatorRep& op, double nu);
/// R_nu A R_nu with R_nu the projector on N1 <= nu, N2 <= nu.
OperatorRep apply_R_cutoff(const OperatorRep& op, std::size_t nu);
/// Diagonal of sigma_nu.
RVector sigma_weights(const FockBasis& basis, double nu);

}  // namespace nelson

#endif  // NELSON_HAMILTONIAN_HPP
