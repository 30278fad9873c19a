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

#include <doctest.h>

#include <cmath>

#include "nelson/observables.hpp"
#include "nelson/states.hpp"
#include "support.hpp"

using namespace nelson;
using testing::desk_grid;
using testing::random_vector;

namespace {
struct Fixture {
  ModeGrid grid{desk_grid()};
  BasisPtr basis = FockBasis::for_grid(grid, 20, 20);
  CVector u = 0.8 * random_vector(grid.size(), 1);
  CVector alpha = 0.6 * random_vector(grid.cutoff_count(), 2);
};

NormalOrderSpec mixed(const ModeGrid& grid) {
  return {{random_vector(grid.size(), 3)},
          {random_vector(grid.size(), 4), random_vector(grid.size(), 5)},
          {random_vector(grid.cutoff_count(), 6)},
          {random_vector(grid.cutoff_count(), 7)}};
}
}  // namespace

TEST_CASE_FIXTURE(Fixture, "coherent field averages reproduce the classical fields") {
  for (double lambda : {1.0, 0.5}) {
    const QuantumState c = coherent_amplitudes(basis, u / lambda, alpha / lambda).state;
    const FieldAverage avg = field_average(c, lambda);
    CHECK((avg.psi - u).norm() < 1e-10);
    CHECK((avg.a - alpha).norm() < 1e-10);
  }
}

TEST_CASE_FIXTURE(Fixture, "normal-ordered averages of coherent states factorize") {
  const NormalOrderSpec spec = mixed(grid);
  CHECK(spec.delta() == 5);
  const double lambda = 0.70710678118654752;
  const QuantumState c = coherent_amplitudes(basis, u / lambda, alpha / lambda).state;
  const cplx expect = classical_product(spec, u, alpha);
  CHECK(std::abs(normal_ordered_average(c, spec, lambda) - expect) < 1e-9);
  const cplx adj = normal_ordered_average(c, spec.adjoint(), lambda);
  CHECK(std::abs(adj - std::conj(expect)) < 1e-9);
}

TEST_CASE_FIXTURE(Fixture, "classical product uses conjugates for creators") {
  const CVector g = random_vector(grid.size(), 9);
  const NormalOrderSpec create{{g}, {}, {}, {}};
  const NormalOrderSpec annihilate{{}, {g}, {}, {}};
  cplx c = 0.0, a = 0.0;
  for (Eigen::Index q = 0; q < u.size(); ++q) {
    c += std::conj(g[q]) * std::conj(u[q]);
    a += std::conj(g[q]) * u[q];
  }
  CHECK(std::abs(classical_product(create, u, alpha) - c) < 1e-15);
  CHECK(std::abs(classical_product(annihilate, u, alpha) - a) < 1e-15);
  const ClassicalState st{0.0, grid.inverse_fourier(u), alpha};
  CHECK(std::abs(classical_product(grid, annihilate, st) - a) < 1e-14);
}

TEST_CASE_FIXTURE(Fixture, "unequal creation and annihilation counts vanish on fixed-number states") {
  StateSpec s;
  s.family = StateSpec::Family::Theta;
  s.u0 = random_vector(grid.size(), 13);
  s.alpha0 = random_vector(grid.cutoff_count(), 14);
  s.lambda = 0.5;
  const BasisPtr b = FockBasis::for_grid(grid, 6, 6);
  const QuantumState theta = build_state(b, s);
  const NormalOrderSpec unequal{{random_vector(grid.size(), 15)}, {}, {}, {}};
  CHECK(normal_ordered_average(theta, unequal, 0.5) == cplx(0.0, 0.0));
  const NormalOrderSpec empty{};
  CHECK_THROWS_AS(normal_ordered_average(theta, empty, 0.5), ConfigError);
  const NormalOrderSpec wrong{{CVector::Ones(7)}, {}, {}, {}};
  CHECK_THROWS_AS(normal_ordered_average(theta, wrong, 0.5), ConfigError);
}

TEST_CASE("rate fit recovers exact power laws") {
  const std::vector<double> lambdas{1.0, 0.7, 0.5, 0.25};
  for (double p : {0.5, 1.0, 2.0}) {
    std::vector<double> e;
    for (double l : lambdas) e.push_back(3.0 * std::pow(l, p));
    const RateFit f = rate_fit(lambdas, e);
    CHECK(f.slope == doctest::Approx(p).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
  }
  CHECK_THROWS_AS(rate_fit({1.0, 0.5}, {1.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(rate_fit({1.0, 0.5, 0.25}, {1.0, 0.0, 0.5}), ConfigError);
  CHECK_THROWS_AS(rate_fit({1.0, 1.0, 1.0}, {1.0, 0.5, 0.2}), ConfigError);
}

TEST_CASE("theta prediction is the trapezoid mean over the family") {
  const ModeGrid grid(desk_grid());
  const ClassicalState base{0.0, random_vector(grid.size(), 17), random_vector(grid.cutoff_count(), 18)};
  SolveOptions o;
  o.method = SolveOptions::Method::dopri;
  const ThetaFamily fam = solve_theta_family(grid, base, 16, 0.5, o);
  const NormalOrderSpec spec{{random_vector(grid.size(), 19)}, {random_vector(grid.size(), 20)}, {}, {}};
  cplx mean = 0.0;
  for (const auto& m : fam.members) mean += classical_product(grid, spec, m.at(0.5));
  mean /= 16.0;
  const ThetaAverage avg = classical_prediction(grid, spec, fam, 0.5);
  CHECK(std::abs(avg.value - mean) < 1e-14);
  CHECK(avg.change <= 1e-8 * std::max(1.0, std::abs(avg.value)));
  CHECK_THROWS_AS(solve_theta_family(grid, base, 5, 0.5, o), ConfigError);
}
