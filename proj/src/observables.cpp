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

#include "nelson/observables.hpp"

#include <cmath>

#include "nelson/io.hpp"

namespace nelson {

namespace {
Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

QuantumState annihilate_all(QuantumState s, Species sp, const std::vector<CVector>& fs, bool conjugate) {
  for (const auto& f : fs) s = apply_field(sp, Ladder::annihilate, conjugate ? CVector(f.conjugate()) : f, s).state;
  return s;
}
}  // namespace

FieldAverage field_average(const QuantumState& s, double lambda) {
  const FockBasis& B = *s.basis;
  FieldAverage r{CVector(idx(B.psi().modes())), CVector(idx(B.a().modes()))};
  for (std::size_t q = 0; q < B.psi().modes(); ++q)
    r.psi[idx(q)] = lambda * inner(s, apply_ladder(Species::psi, Ladder::annihilate, q, s).state);
  for (std::size_t k = 0; k < B.a().modes(); ++k)
    r.a[idx(k)] = lambda * inner(s, apply_ladder(Species::a, Ladder::annihilate, k, s).state);
  return r;
}

NormalOrderSpec NormalOrderSpec::adjoint() const {
  auto conj = [](const std::vector<CVector>& v) {
    std::vector<CVector> out;
    for (const auto& x : v) out.push_back(x.conjugate());
    return out;
  };
  return {conj(psi_annihilate), conj(psi_create), conj(a_annihilate), conj(a_create)};
}

cplx normal_ordered_average(const QuantumState& s, const NormalOrderSpec& spec, double lambda) {
  require(spec.delta() >= 1, "normal-ordered average needs at least one field");
  const FockBasis& B = *s.basis;
  auto check = [](const std::vector<CVector>& v, std::size_t n) {
    for (const auto& x : v) require(static_cast<std::size_t>(x.size()) == n, "test function has wrong length");
  };
  check(spec.psi_create, B.psi().modes());
  check(spec.psi_annihilate, B.psi().modes());
  check(spec.a_create, B.a().modes());
  check(spec.a_annihilate, B.a().modes());
  // B = psi*(gbar).. psi(gbar).. a*(gbar).. a(gbar)..; species commute, so <s, B s> = <L, R>.
  QuantumState r = annihilate_all(s, Species::psi, spec.psi_annihilate, true);
  r = annihilate_all(r, Species::a, spec.a_annihilate, true);
  // (psi*(gbar))^* = psi(g).
  QuantumState l = annihilate_all(s, Species::psi, spec.psi_create, false);
  l = annihilate_all(l, Species::a, spec.a_create, false);
  return std::pow(lambda, static_cast<double>(spec.delta())) * inner(l, r);
}

cplx classical_product(const NormalOrderSpec& spec, const CVector& u, const CVector& alpha) {
  cplx v = 1.0;
  for (const auto& g : spec.psi_create) v *= g.dot(u.conjugate());
  for (const auto& g : spec.psi_annihilate) v *= g.dot(u);
  for (const auto& g : spec.a_create) v *= g.dot(alpha.conjugate());
  for (const auto& g : spec.a_annihilate) v *= g.dot(alpha);
  return v;
}

cplx classical_product(const ModeGrid& grid, const NormalOrderSpec& spec, const ClassicalState& state) {
  return classical_product(spec, grid.fourier(state.u), state.alpha);
}

ThetaAverage classical_prediction(const ModeGrid& grid, const NormalOrderSpec& spec, const ThetaFamily& fam, double t,
                                  double tolerance) {
  const std::size_t n = fam.members.size();
  require(n >= 4 && n % 2 == 0, "theta family must have an even number of members, at least 4");
  ThetaAverage r{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < n; ++j) {
    const cplx v = classical_product(grid, spec, fam.members[j].at(t));
    r.value += v;
    if (j % 2 == 0) r.half_grid += v;
  }
  r.value /= static_cast<double>(n);
  r.half_grid /= static_cast<double>(n / 2);
  r.change = std::abs(r.value - r.half_grid);
  if (r.change > tolerance * std::max(1.0, std::abs(r.value)))
    throw NumericalError("theta average not converged: refinement change " + format_double(r.change));
  return r;
}

RateFit rate_fit(const std::vector<double>& lambdas, const std::vector<double>& errors) {
  require(lambdas.size() == errors.size(), "lambda and error arrays must align");
  require(lambdas.size() >= 3, "rate fit needs at least three points");
  const std::size_t n = lambdas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    require(lambdas[i] > 0.0, "lambda values must be positive");
    require(errors[i] > 0.0 && std::isfinite(errors[i]), "errors must be positive for a log-log fit");
    const double x = std::log(lambdas[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  require(den > 0.0, "lambda values must not all coincide");
  RateFit f;
  f.slope = (dn * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / dn;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::log(errors[i]) - (f.intercept + f.slope * std::log(lambdas[i]));
    ss += e * e;
  }
  f.residual = std::sqrt(ss / dn);
  return f;
}

}  // namespace nelson
