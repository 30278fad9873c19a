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
#include <numeric>

#include "nelson/states.hpp"
#include "support.hpp"

using namespace nelson;
using testing::desk_grid;
using testing::random_vector;

namespace {
double poisson_cdf(double mean, std::size_t cap) {
  double term = std::exp(-mean), acc = term;
  for (std::size_t n = 1; n <= cap; ++n) acc += (term *= mean / static_cast<double>(n));
  return acc;
}
}  // namespace

TEST_CASE("Poisson tails match direct sums") {
  for (double m : {0.1, 1.0, 4.0})
    for (std::size_t cap : {0u, 3u, 10u}) {
      const double expect = 1.0 - poisson_cdf(m, cap);
      CHECK(poisson_tail(m, cap) == doctest::Approx(expect).epsilon(1e-10));
    }
  CHECK(poisson_tail(2.0, 60) < 1e-40);
  CHECK(poisson_tail(2.0, 60) >= 0.0);
  for (double m : {0.5, 3.0}) {
    const std::size_t c = required_cap(m, 1e-12);
    CHECK(poisson_tail(m, c) <= 1e-12);
    CHECK(poisson_tail(m, c - 1) > 1e-12);
  }
  const double expect = 1.0 - poisson_cdf(1.5, 6) * poisson_cdf(0.7, 4);
  CHECK(coherent_tail(1.5, 0.7, 6, 4) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("coherent amplitudes are Poissonian and normalized") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 20, 20);
  const CVector f = 0.9 * random_vector(grid.size(), 1), g = 1.1 * random_vector(grid.cutoff_count(), 2);
  const CoherentState c = coherent_amplitudes(basis, f, g);
  CHECK(c.state.norm() * c.state.norm() == doctest::Approx(1.0 - c.tail).epsilon(1e-13));
  const QuantumState one = psi_number_project(c.state, 1);
  const double p1 = one.norm() * one.norm();
  const double m = f.squaredNorm();
  CHECK(p1 == doctest::Approx(m * std::exp(-m)).epsilon(1e-10));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const LadderResult r = apply_ladder(Species::psi, Ladder::annihilate, q, c.state);
    CHECK(std::abs(inner(c.state, r.state) - f[static_cast<Eigen::Index>(q)]) < 1e-10);
  }
  const BasisPtr small = FockBasis::for_grid(grid, 2, 2);
  CHECK_THROWS_AS(coherent_amplitudes(small, f, g), ConfigError);
}

TEST_CASE("Weyl operators shift the fields") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 14, 14);
  const CVector f = 0.4 * random_vector(grid.size(), 7), g = 0.3 * random_vector(grid.cutoff_count(), 8);
  const QuantumState s = number_cutoff(random_state(basis, 4), 2);
  CHECK(weyl_shift_check(Species::a, f, g, random_vector(grid.cutoff_count(), 9), s) < 1e-10);
  CHECK(weyl_shift_check(Species::psi, f, g, random_vector(grid.size(), 10), s) < 1e-10);
}

TEST_CASE("product states have the stated particle numbers") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 6, 28);
  StateSpec spec;
  spec.u0 = random_vector(grid.size(), 11);
  spec.alpha0 = random_vector(grid.cutoff_count(), 12);
  spec.lambda = 0.5;
  spec.family = StateSpec::Family::Theta;
  const QuantumState theta = build_state(basis, spec);
  CHECK(theta.norm() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sector_project(theta, 4, 4).norm() == doctest::Approx(1.0).epsilon(1e-13));
  spec.family = StateSpec::Family::Psi;
  const QuantumState psi = build_state(basis, spec);
  CHECK(psi_number_project(psi, 4).norm() == doctest::Approx(psi.norm()).epsilon(1e-13));
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-6));
  spec.family = StateSpec::Family::Lambda;
  spec.lambda = 1.0;
  const BasisPtr wide = FockBasis::for_grid(grid, 16, 16);
  const QuantumState lam = build_state(wide, spec);
  CHECK((lam.amplitudes - coherent_amplitudes(wide, spec.u0, spec.alpha0).state.amplitudes).norm() < 1e-14);
  CHECK(particle_number(0.5) == 4);
  CHECK(particle_number(1.0) == 1);
  CHECK_THROWS_AS(particle_number(0.6), ConfigError);
}

TEST_CASE("d factor matches factorials and Stirling") {
  for (int x = 1; x <= 10; ++x) {
    const double fact = std::tgamma(x + 1.0);
    const double expect = std::sqrt(fact) / (std::exp(-x / 2.0) * std::pow(x, x / 2.0));
    CHECK(d_factor(x) == doctest::Approx(expect).epsilon(1e-12));
  }
  const double big = 400.0;
  CHECK(d_factor(big) / std::pow(2.0 * kPi * big, 0.25) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("theta identity holds on the desk grid") {
  const ModeGrid grid(desk_grid());
  const CVector u0 = random_vector(grid.size(), 21), a0 = random_vector(grid.cutoff_count(), 22);
  const BasisPtr basis = FockBasis::for_grid(grid, 16, 16);
  const std::size_t n = alias_free_theta_count(1, 16);
  const ThetaIdentity r = theta_identity_check(basis, u0, a0, 1.0, n);
  CHECK(r.residual() < 1e-10);
  CHECK(r.tail < 1e-10);
}

TEST_CASE("alias-free theta counts separate sector x from every other sector") {
  for (std::size_t x : {1u, 2u, 3u, 4u})
    for (std::size_t cap : {8u, 20u, 40u}) {
      const std::size_t n = alias_free_theta_count(x, cap);
      CHECK(n % 2 == 0);
      CHECK(n >= 8 * x);
      for (std::size_t m = 0; m <= cap; ++m)
        if (m != x) CHECK((m > x ? m - x : x - m) % n != 0);
    }
}

TEST_CASE("displaced product states have no one-particle part") {
  const ModeGrid grid(desk_grid());
  const CVector u0 = random_vector(grid.size(), 31), a0 = random_vector(grid.cutoff_count(), 32);
  CHECK(displaced_one_particle_residual(u0, a0, 1.0, 0.0) < 1e-8);
  CHECK(displaced_one_particle_residual(u0, a0, 0.5, 0.9) < 1e-8);
}
