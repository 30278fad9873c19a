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

#include "nelson/states.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nelson/io.hpp"
#include "nelson/propagate.hpp"

namespace nelson {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// prod_i f_i^{n_i} / sqrt(n_i!) for every occupation of one species.
CVector monomials(const SpeciesBasis& s, const CVector& f) {
  require(static_cast<std::size_t>(f.size()) == s.modes(), "amplitude vector has wrong length for species");
  const std::size_t cap = s.cap();
  Eigen::MatrixXcd table(idx(s.modes()), idx(cap + 1));
  for (std::size_t m = 0; m < s.modes(); ++m) {
    table(idx(m), 0) = 1.0;
    for (std::size_t n = 1; n <= cap; ++n)
      table(idx(m), idx(n)) = table(idx(m), idx(n - 1)) * f[idx(m)] / std::sqrt(static_cast<double>(n));
  }
  CVector out(idx(s.size()));
  for (std::size_t l = 0; l < s.size(); ++l) {
    cplx v = 1.0;
    const auto occ = s.occupations(l);
    for (std::size_t m = 0; m < s.modes(); ++m) v *= table(idx(m), occ[m]);
    out[idx(l)] = v;
  }
  return out;
}

// Normalized symmetric product v^{(x) n}: sqrt(n!) times the monomials on sector n.
CVector product_amplitudes(const SpeciesBasis& s, const CVector& v, std::size_t n) {
  require(n <= s.cap(), "particle number " + std::to_string(n) + " exceeds the cap " + std::to_string(s.cap()));
  CVector mono = monomials(s, v);
  CVector out = CVector::Zero(mono.size());
  const double pref = std::exp(0.5 * std::lgamma(static_cast<double>(n) + 1.0));
  const std::size_t o = s.sector_offset(n), len = s.sector_size(n);
  out.segment(idx(o), idx(len)) = pref * mono.segment(idx(o), idx(len));
  return out;
}

CVector coherent_species(const SpeciesBasis& s, const CVector& f) {
  return std::exp(-0.5 * f.squaredNorm()) * monomials(s, f);
}

QuantumState tensor(const BasisPtr& basis, const CVector& psi, const CVector& a) {
  QuantumState out = zero_state(basis);
  const FockBasis& B = *basis;
  for (std::size_t i = 0; i < B.size(); ++i) out.amplitudes[idx(i)] = psi[idx(B.psi_local(i))] * a[idx(B.a_local(i))];
  return out;
}

void check_unit(const CVector& v, const char* name) {
  require(std::abs(v.norm() - 1.0) <= 1e-12, std::string(name) + " must have norm 1");
}

}  // namespace

double poisson_tail(double mean, std::size_t cap) {
  require(mean >= 0.0 && std::isfinite(mean), "Poisson mean must be non-negative");
  if (mean == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t n = cap + 1;; ++n) {
    const double nd = static_cast<double>(n);
    const double term = std::exp(-mean + nd * std::log(mean) - std::lgamma(nd + 1.0));
    sum += term;
    if (nd > mean && term <= 1e-18 * sum) break;
    if (n > cap + 100000) break;
  }
  return std::min(1.0, sum);
}

std::size_t required_cap(double mean, double tolerance) {
  require(tolerance > 0.0, "tail tolerance must be positive");
  std::size_t cap = 0;
  while (poisson_tail(mean, cap) > tolerance) ++cap;
  return cap;
}

double coherent_tail(double psi_mean, double a_mean, std::size_t psi_cap, std::size_t a_cap) {
  const double t1 = poisson_tail(psi_mean, psi_cap), t2 = poisson_tail(a_mean, a_cap);
  return t1 + t2 - t1 * t2;
}

CoherentState coherent_amplitudes(const BasisPtr& basis, const CVector& f, const CVector& g, double tol) {
  const FockBasis& B = *basis;
  CoherentState c;
  c.tail = coherent_tail(f.squaredNorm(), g.squaredNorm(), B.psi().cap(), B.a().cap());
  if (c.tail > tol)
    throw ConfigError("coherent tail " + format_double(c.tail) + " beyond caps exceeds " + format_double(tol) +
                      "; required caps psi >= " + std::to_string(required_cap(f.squaredNorm(), 0.5 * tol)) +
                      ", a >= " + std::to_string(required_cap(g.squaredNorm(), 0.5 * tol)));
  c.state = tensor(basis, coherent_species(B.psi(), f), coherent_species(B.a(), g));
  return c;
}

double weyl_shift_check(Species species, const CVector& f, const CVector& g, const CVector& gamma,
                        const QuantumState& state) {
  const CVector& shift = species == Species::psi ? f : g;
  require(gamma.size() == shift.size(), "gamma has wrong length for species");
  const CVector gbar = gamma.conjugate();
  const QuantumState x = weyl_displace(f, g, state);
  const QuantumState y = apply_field(species, Ladder::annihilate, gbar, x).state;
  const QuantumState z = weyl_displace(-f, -g, y);
  const QuantumState direct = apply_field(species, Ladder::annihilate, gbar, state).state;
  const cplx c = gamma.dot(shift);
  return (z.amplitudes - direct.amplitudes - c * state.amplitudes).norm();
}

std::size_t particle_number(double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
  const double x = 1.0 / (lambda * lambda);
  const double r = std::round(x);
  require(r >= 1.0 && std::abs(x - r) <= 1e-9 * r, "lambda^{-2} must be a positive integer for this family");
  return static_cast<std::size_t>(r);
}

QuantumState build_state(const BasisPtr& basis, const StateSpec& spec) {
  const FockBasis& B = *basis;
  check_unit(spec.u0, "u0");
  check_unit(spec.alpha0, "alpha0");
  require(spec.lambda > 0.0, "lambda must be positive");
  const CVector f = spec.u0 / spec.lambda, g = spec.alpha0 / spec.lambda;
  switch (spec.family) {
    case StateSpec::Family::Lambda:
      return coherent_amplitudes(basis, f, g, spec.tail_tolerance).state;
    case StateSpec::Family::Psi: {
      const std::size_t i = particle_number(spec.lambda);
      const double tail = poisson_tail(g.squaredNorm(), B.a().cap());
      if (tail > spec.tail_tolerance)
        throw ConfigError("coherent tail " + format_double(tail) + " exceeds tolerance; required a cap >= " +
                          std::to_string(required_cap(g.squaredNorm(), spec.tail_tolerance)));
      return tensor(basis, product_amplitudes(B.psi(), spec.u0, i), coherent_species(B.a(), g));
    }
    case StateSpec::Family::Theta: {
      const std::size_t i = particle_number(spec.lambda);
      return tensor(basis, product_amplitudes(B.psi(), spec.u0, i), product_amplitudes(B.a(), spec.alpha0, i));
    }
  }
  throw ConfigError("unknown state family");
}

double d_factor(double x) {
  require(x > 0.0 && std::isfinite(x), "d_factor needs a positive argument");
  return std::exp(0.5 * std::lgamma(x + 1.0) + 0.5 * x - 0.5 * x * std::log(x));
}

std::size_t alias_free_theta_count(std::size_t x, std::size_t a_cap) {
  std::size_t n = std::max<std::size_t>(8 * x, std::max(x, a_cap > x ? a_cap - x : 0) + 1);
  if (n % 2) ++n;
  return std::max<std::size_t>(n, 4);
}

ThetaIdentity theta_identity_check(const BasisPtr& basis, const CVector& u0, const CVector& alpha0, double lambda,
                                   std::size_t n_theta) {
  require(n_theta >= 4 && n_theta % 2 == 0, "theta sample count must be even and at least 4");
  const std::size_t x = particle_number(lambda);
  const FockBasis& B = *basis;
  require(x <= B.psi().cap() && x <= B.a().cap(), "lambda^{-2} exceeds the caps");
  StateSpec spec;
  spec.family = StateSpec::Family::Theta;
  spec.u0 = u0;
  spec.alpha0 = alpha0;
  spec.lambda = lambda;
  const QuantumState theta = build_state(basis, spec);
  const CVector f = u0 / lambda, g = alpha0 / lambda;
  const double d2 = std::pow(d_factor(static_cast<double>(x)), 2);

  ThetaIdentity r;
  r.n_theta = n_theta;
  const CoherentState c = coherent_amplitudes(basis, f, g, 1.0);
  r.tail = c.tail;
  const QuantumState proj = sector_project(c.state, x, x);
  r.projection_residual = (d2 * proj.amplitudes - theta.amplitudes).norm();

  const CVector psi_part = coherent_species(B.psi(), f);
  CVector a_avg = CVector::Zero(idx(B.a().size()));
  for (std::size_t j = 0; j < n_theta; ++j) {
    const double th = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_theta);
    const CVector gt = std::exp(-kI * th) * g;
    a_avg += std::exp(kI * static_cast<double>(x) * th) * coherent_species(B.a(), gt);
  }
  a_avg /= static_cast<double>(n_theta);
  const QuantumState quad = psi_number_project(tensor(basis, psi_part, a_avg), x);
  r.quadrature_residual = (d2 * quad.amplitudes - theta.amplitudes).norm();
  return r;
}

double displaced_one_particle_residual(const CVector& u0, const CVector& alpha0, double lambda, double theta,
                                       std::size_t extra) {
  check_unit(u0, "u0");
  check_unit(alpha0, "alpha0");
  const std::size_t i = particle_number(lambda);
  const std::size_t cap = 2 * i + extra;
  const auto mp = static_cast<std::size_t>(u0.size()), ma = static_cast<std::size_t>(alpha0.size());
  const PropagatorConfig tight{PropagatorConfig::Method::poly_action, 1e-15, 200000};

  // C* factorizes over the species, so each factor is displaced in its own single-species space.
  const auto psi_basis = std::make_shared<const FockBasis>(mp, cap, ma, 0);
  const auto a_basis = std::make_shared<const FockBasis>(mp, 0, ma, cap);
  const QuantumState psi_part = tensor(psi_basis, product_amplitudes(psi_basis->psi(), u0, i), CVector::Ones(1));
  const QuantumState a_part = tensor(a_basis, CVector::Ones(1), product_amplitudes(a_basis->a(), alpha0, i));
  const QuantumState psi_back = weyl_displace(-u0 / lambda, CVector::Zero(idx(ma)), psi_part, tight);
  const QuantumState a_back =
      weyl_displace(CVector::Zero(idx(mp)), -std::exp(-kI * theta) * alpha0 / lambda, a_part, tight);

  const double psi0 = std::abs(psi_back.amplitudes[0]), a0 = std::abs(a_back.amplitudes[0]);
  const double psi1 = sector_project(psi_back, 1, 0).norm(), a1 = sector_project(a_back, 0, 1).norm();
  return std::sqrt(psi1 * psi1 * a0 * a0 + psi0 * psi0 * a1 * a1);
}

}  // namespace nelson
