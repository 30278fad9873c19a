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

#include "nelson/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>

#include "nelson/io.hpp"

namespace nelson {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
std::size_t idx_u(Eigen::Index i) { return static_cast<std::size_t>(i); }
using Triplet = Eigen::Triplet<cplx, Eigen::Index>;

SparseMatrix from_triplets(std::size_t n, std::vector<Triplet>& t) {
  SparseMatrix m(idx(n), idx(n));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SparseMatrix adjoint_of(const SparseMatrix& m) {
  SparseMatrix a = m.adjoint();
  a.makeCompressed();
  return a;
}

SparseMatrix diagonal_matrix(const RVector& d) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, cplx(d[i], 0.0));
  return from_triplets(static_cast<std::size_t>(d.size()), t);
}

}  // namespace

QuantumState OperatorRep::apply(const QuantumState& s) const {
  require(s.basis == basis, "operator and state live on different bases");
  return {basis, apply(s.amplitudes)};
}

CVector OperatorRep::apply(const CVector& x) const {
  require(x.size() == matrix.cols(), "vector length does not match operator");
  CVector y = matrix * x;
  return y;
}

double OperatorRep::hermiticity_residual() const {
  const SparseMatrix d = matrix - SparseMatrix(matrix.adjoint());
  double r = 0.0;
  for (Eigen::Index k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

Eigen::MatrixXcd OperatorRep::dense() const { return Eigen::MatrixXcd(matrix); }

std::pair<double, double> OperatorRep::spectral_bounds() const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
    double c = 0.0, rad = 0.0;
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      if (it.col() == r)
        c = it.value().real();
      else
        rad += std::abs(it.value());
    }
    lo = std::min(lo, c - rad);
    hi = std::max(hi, c + rad);
  }
  if (matrix.rows() == 0) return {0.0, 0.0};
  return {lo, hi};
}

void OperatorRep::write_csv(std::ostream& out) const {
  write_csv_row(out, {"row", "col", "re", "im"});
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it)
      write_csv_row(out, {std::to_string(it.row()), std::to_string(it.col()), format_double(it.value().real()),
                          format_double(it.value().imag())});
}

RVector free_energies(const FockBasis& B, const ModeGrid& grid) {
  require(B.psi().modes() == grid.size() && B.a().modes() == grid.cutoff_count(),
          "basis modes do not match the grid");
  RVector ep(idx(B.psi().size())), ea(idx(B.a().size()));
  for (std::size_t l = 0; l < B.psi().size(); ++l) {
    double e = 0.0;
    for (std::size_t q = 0; q < grid.size(); ++q) e += grid.kinetic_energy(q) * B.psi().occupation(l, q);
    ep[idx(l)] = e;
  }
  for (std::size_t l = 0; l < B.a().size(); ++l) {
    double e = 0.0;
    for (std::size_t j = 0; j < grid.cutoff_count(); ++j)
      e += grid.dispersion(grid.cutoff_modes()[j]) * B.a().occupation(l, j);
    ea[idx(l)] = e;
  }
  RVector out(idx(B.size()));
  for (std::size_t i = 0; i < B.size(); ++i) out[idx(i)] = ep[idx(B.psi_local(i))] + ea[idx(B.a_local(i))];
  return out;
}

OperatorRep build_H0(const BasisPtr& basis, const ModeGrid& grid) {
  return {basis, diagonal_matrix(free_energies(*basis, grid)), true};
}

OperatorRep build_number(const BasisPtr& basis, Species species) {
  RVector d(idx(basis->size()));
  for (std::size_t i = 0; i < basis->size(); ++i)
    d[idx(i)] = static_cast<double>(species == Species::psi ? basis->n1(i) : basis->n2(i));
  return {basis, diagonal_matrix(d), true};
}

OperatorRep build_HI(const BasisPtr& basis, const ModeGrid& grid, double lambda) {
  require(std::isfinite(lambda) && lambda >= 0.0, "coupling lambda must be non-negative");
  const FockBasis& B = *basis;
  require(B.psi().modes() == grid.size() && B.a().modes() == grid.cutoff_count(),
          "basis modes do not match the grid");
  std::vector<Triplet> t;
  if (lambda > 0.0) {
    const std::size_t mq = grid.size(), ma = grid.cutoff_count();
    t.reserve(B.size() * std::min<std::size_t>(mq * ma, 64));
    for (std::size_t i = 0; i < B.size(); ++i) {
      const std::size_t lp = B.psi_local(i), la = B.a_local(i);
      for (std::size_t j = 0; j < ma; ++j) {
        const int na = B.a().occupation(la, j);
        if (na == 0) continue;
        const auto la1 = static_cast<std::size_t>(B.a().lower(la, j));
        const std::size_t kmode = grid.cutoff_modes()[j];
        const double fj = lambda * grid.form_factors()[idx(j)] * std::sqrt(static_cast<double>(na));
        for (std::size_t q = 0; q < mq; ++q) {
          const int nq = B.psi().occupation(lp, q);
          if (nq == 0) continue;
          const auto lp1 = static_cast<std::size_t>(B.psi().lower(lp, q));
          const std::size_t qk = grid.shift(q, kmode, +1);
          const int nqk = B.psi().occupation(lp1, qk);
          const auto lp2 = static_cast<std::size_t>(B.psi().raise(lp1, qk));
          const double v = fj * std::sqrt(static_cast<double>(nq) * (nqk + 1));
          t.emplace_back(idx(B.index(lp2, la1)), idx(i), cplx(v, 0.0));
        }
      }
    }
  }
  const SparseMatrix x = from_triplets(B.size(), t);
  SparseMatrix h = x + adjoint_of(x);
  h.makeCompressed();
  return {basis, std::move(h), true};
}

OperatorRep build_H(const BasisPtr& basis, const ModeGrid& grid, double lambda) {
  OperatorRep h = build_HI(basis, grid, lambda);
  h.matrix += build_H0(basis, grid).matrix;
  h.matrix.makeCompressed();
  return h;
}

SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix c = a * b - b * a;
  c.prune(cplx(0.0, 0.0));
  return c;
}

FluctuationCoefficients fluctuation_coefficients(const ModeGrid& grid, const ClassicalState& s) {
  require(static_cast<std::size_t>(s.u.size()) == grid.size() &&
              static_cast<std::size_t>(s.alpha.size()) == grid.cutoff_count(),
          "classical state does not match the grid");
  return {s.alpha, grid.fourier(s.u)};
}

FluctuationGenerator::FluctuationGenerator(const BasisPtr& basis, const ModeGrid& grid)
    : basis_(basis), energies_(nelson::free_energies(*basis, grid)) {
  const FockBasis& B = *basis;
  const std::size_t mq = grid.size(), ma = grid.cutoff_count();
  n_alpha_ = ma;
  n_u_ = mq;
  // Term layout: [alpha (j, q)], [u_q psi*_{q+k} a_k (j, q)], [u_q psi*_{q-k} a*_k (j, q)].
  const std::size_t block = ma * mq;
  std::vector<std::vector<Triplet>> t(3 * block);
  for (std::size_t i = 0; i < B.size(); ++i) {
    const std::size_t lp = B.psi_local(i), la = B.a_local(i);
    for (std::size_t j = 0; j < ma; ++j) {
      const std::size_t kmode = grid.cutoff_modes()[j];
      const double f0 = grid.form_factors()[idx(j)];
      const int na = B.a().occupation(la, j);
      for (std::size_t q = 0; q < mq; ++q) {
        const std::size_t qk = grid.shift(q, kmode, +1), qmk = grid.shift(q, kmode, -1);
        const int nq = B.psi().occupation(lp, q);
        if (nq > 0) {
          const auto lp1 = static_cast<std::size_t>(B.psi().lower(lp, q));
          const int nqk = B.psi().occupation(lp1, qk);
          const auto lp2 = static_cast<std::size_t>(B.psi().raise(lp1, qk));
          t[j * mq + q].emplace_back(idx(B.index(lp2, la)), idx(i),
                                     f0 * std::sqrt(static_cast<double>(nq) * (nqk + 1)));
        }
        if (na > 0) {
          const std::int64_t lp1 = B.psi().raise(lp, qk);
          if (lp1 >= 0) {
            const auto la1 = static_cast<std::size_t>(B.a().lower(la, j));
            const double v = f0 * std::sqrt(static_cast<double>(na) * (B.psi().occupation(lp, qk) + 1));
            t[block + j * mq + q].emplace_back(idx(B.index(static_cast<std::size_t>(lp1), la1)), idx(i), v);
          }
        }
        {
          const std::int64_t lp1 = B.psi().raise(lp, qmk);
          const std::int64_t la1 = B.a().raise(la, j);
          if (lp1 >= 0 && la1 >= 0) {
            const double v = f0 * std::sqrt(static_cast<double>(na + 1) * (B.psi().occupation(lp, qmk) + 1));
            t[2 * block + j * mq + q].emplace_back(
                idx(B.index(static_cast<std::size_t>(lp1), static_cast<std::size_t>(la1))), idx(i), v);
          }
        }
      }
    }
  }
  // Merge every term and its adjoint into one row-compressed table tagged by term id.
  std::vector<std::uint32_t> count(B.size() + 1, 0);
  for (std::size_t n = 0; n < t.size(); ++n) {
    if (t[n].empty()) continue;
    const std::size_t type = n / block, j = (n % block) / mq, q = n % mq;
    const std::size_t kmode = grid.cutoff_modes()[j];
    const double w = grid.dispersion(kmode);
    Term term;
    term.alpha = type == 0;
    term.coefficient = term.alpha ? j : q;
    if (type == 0)
      term.shift = grid.kinetic_energy(grid.shift(q, kmode, +1)) - grid.kinetic_energy(q);
    else if (type == 1)
      term.shift = grid.kinetic_energy(grid.shift(q, kmode, +1)) - w;
    else
      term.shift = grid.kinetic_energy(grid.shift(q, kmode, -1)) + w;
    for (const Triplet& e : t[n]) {
      ++count[idx_u(e.row()) + 1];
      ++count[idx_u(e.col()) + 1];
    }
    terms_.push_back(term);
  }
  for (std::size_t r = 0; r < B.size(); ++r) {
    require(count[r + 1] <= std::numeric_limits<std::uint32_t>::max() - count[r], "fluctuation generator too large");
    count[r + 1] += count[r];
  }
  row_start_ = count;
  const std::size_t nnz = row_start_.back();
  cols_.resize(nnz);
  values_.resize(nnz);
  tags_.resize(nnz);
  std::vector<std::uint32_t> fill(row_start_.begin(), row_start_.end() - 1);
  const auto nterms = static_cast<std::uint32_t>(terms_.size());
  std::uint32_t id = 0;
  for (std::size_t n = 0; n < t.size(); ++n) {
    if (t[n].empty()) continue;
    for (const Triplet& e : t[n]) {
      const std::size_t r = idx_u(e.row()), c = idx_u(e.col());
      const double v = e.value().real();
      std::uint32_t& fr = fill[r];
      cols_[fr] = static_cast<std::uint32_t>(c);
      values_[fr] = v;
      tags_[fr++] = id;
      std::uint32_t& fc = fill[c];
      cols_[fc] = static_cast<std::uint32_t>(r);
      values_[fc] = v;
      tags_[fc++] = id + nterms;
    }
    std::vector<Triplet>().swap(t[n]);
    ++id;
  }
}

void FluctuationGenerator::check(const FluctuationCoefficients& c) const {
  require(static_cast<std::size_t>(c.alpha.size()) == n_alpha_ && static_cast<std::size_t>(c.u_hat.size()) == n_u_,
          "fluctuation coefficients do not match the generator");
}

std::vector<cplx> FluctuationGenerator::weights(const FluctuationCoefficients& c, double t, bool rotate) const {
  check(c);
  const std::size_t n = terms_.size();
  std::vector<cplx> w(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Term& term = terms_[i];
    cplx v = term.alpha ? c.alpha[idx(term.coefficient)] : c.u_hat[idx(term.coefficient)];
    if (rotate) v *= std::exp(kI * term.shift * t);
    w[i] = v;
    w[i + n] = std::conj(v);
  }
  return w;
}

void FluctuationGenerator::multiply(const std::vector<cplx>& w, const CVector& x, CVector& y) const {
  require(static_cast<std::size_t>(x.size()) == basis_->size(), "state has wrong dimension");
  y.resize(x.size());
  const cplx* xs = x.data();
  const std::size_t rows = row_start_.size() - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    cplx acc = 0.0;
    for (std::uint32_t e = row_start_[r]; e < row_start_[r + 1]; ++e) acc += w[tags_[e]] * (values_[e] * xs[cols_[e]]);
    y[idx(r)] = acc;
  }
}

void FluctuationGenerator::apply(const FluctuationCoefficients& c, const CVector& x, CVector& y) const {
  multiply(weights(c, 0.0, false), x, y);
}

void FluctuationGenerator::apply_interaction(double t, const FluctuationCoefficients& c, const CVector& x,
                                             CVector& y) const {
  // Every term moves the free energy by a fixed amount, so U0 conjugation is one phase per term.
  multiply(weights(c, t, true), x, y);
}

OperatorRep FluctuationGenerator::assemble(const FluctuationCoefficients& c) const {
  const std::vector<cplx> w = weights(c, 0.0, false);
  std::vector<Triplet> t;
  t.reserve(values_.size());
  const std::size_t rows = row_start_.size() - 1;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::uint32_t e = row_start_[r]; e < row_start_[r + 1]; ++e)
      if (w[tags_[e]] != 0.0) t.emplace_back(idx(r), idx(cols_[e]), w[tags_[e]] * values_[e]);
  SparseMatrix v = from_triplets(basis_->size(), t);
  v.prune(cplx(0.0, 0.0));
  v.makeCompressed();
  return {basis_, std::move(v), true};
}

OperatorRep build_V(const BasisPtr& basis, const ModeGrid& grid, const ClassicalState& state) {
  return FluctuationGenerator(basis, grid).assemble(fluctuation_coefficients(grid, state));
}

OperatorRep interaction_V(const BasisPtr& basis, const ModeGrid& grid, const ClassicalState& state) {
  OperatorRep v = build_V(basis, grid, state);
  const RVector e = free_energies(*basis, grid);
  for (Eigen::Index r = 0; r < v.matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(v.matrix, r); it; ++it)
      it.valueRef() *= std::exp(kI * (e[it.row()] - e[it.col()]) * state.t);
  return v;
}

FluctuationKernels fluctuation_kernels(const ModeGrid& grid, const CVector& u) {
  require(static_cast<std::size_t>(u.size()) == grid.size(), "u has wrong length for the grid");
  const auto nx = idx(grid.size()), na = idx(grid.cutoff_count());
  FluctuationKernels k{Eigen::MatrixXcd(nx, na), Eigen::MatrixXcd(nx, na), Eigen::MatrixXcd(nx, na),
                       Eigen::MatrixXcd(nx, na)};
  for (std::size_t x = 0; x < grid.size(); ++x) {
    const auto xv = grid.position(x);
    for (std::size_t j = 0; j < grid.cutoff_count(); ++j) {
      const auto kv = grid.momentum(grid.cutoff_modes()[j]);
      const double kx = kv[0] * xv[0] + kv[1] * xv[1] + kv[2] * xv[2];
      const double f0 = grid.form_factors()[idx(j)];
      const cplx ux = u[idx(x)], e = std::exp(kI * kx);
      k.mm(idx(x), idx(j)) = f0 * e * std::conj(ux);
      k.pm(idx(x), idx(j)) = f0 * e * ux;
      k.mp(idx(x), idx(j)) = f0 * std::conj(e) * std::conj(ux);
      k.pp(idx(x), idx(j)) = f0 * std::conj(e) * ux;
    }
  }
  return k;
}

double kernel_norm(const Eigen::MatrixXcd& kernel) { return kernel.norm(); }

double smooth_cutoff(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double r = s - 1.0;
  return 1.0 - 3.0 * r * r + 2.0 * r * r * r;
}

RVector sigma_weights(const FockBasis& B, double nu) {
  require(nu >= 1.0, "cutoff nu must be at least 1");
  RVector w(idx(B.size()));
  for (std::size_t i = 0; i < B.size(); ++i)
    w[idx(i)] = smooth_cutoff(static_cast<double>(B.n1(i) + B.n2(i)) / nu);
  return w;
}

OperatorRep apply_sigma_cutoff(const OperatorRep& op, double nu) {
  const RVector w = sigma_weights(*op.basis, nu);
  OperatorRep out = op;
  for (Eigen::Index r = 0; r < out.matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(out.matrix, r); it; ++it) it.valueRef() *= w[it.row()] * w[it.col()];
  out.matrix.prune(cplx(0.0, 0.0));
  return out;
}

OperatorRep apply_R_cutoff(const OperatorRep& op, std::size_t nu) {
  require(nu >= 1, "cutoff nu must be at least 1");
  const FockBasis& B = *op.basis;
  OperatorRep out = op;
  auto keep = [&](Eigen::Index i) {
    return B.n1(static_cast<std::size_t>(i)) <= nu && B.n2(static_cast<std::size_t>(i)) <= nu;
  };
  for (Eigen::Index r = 0; r < out.matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(out.matrix, r); it; ++it)
      if (!keep(it.row()) || !keep(it.col())) it.valueRef() = 0.0;
  out.matrix.prune(cplx(0.0, 0.0));
  return out;
}

}  // namespace nelson
