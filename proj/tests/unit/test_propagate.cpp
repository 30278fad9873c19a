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
#include <unsupported/Eigen/MatrixFunctions>

#include "nelson/propagate.hpp"
#include "nelson/states.hpp"
#include "support.hpp"

using namespace nelson;
using testing::desk_grid;
using testing::random_vector;

namespace {
Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

Eigen::MatrixXcd random_hermitian(std::size_t n, unsigned seed) {
  std::srand(seed);
  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(ix(n), ix(n));
  return 0.5 * (a + a.adjoint());
}

Trajectory reference(const ModeGrid& grid, double T) {
  SolveOptions o;
  o.method = SolveOptions::Method::dopri;
  const ClassicalState init{0.0, random_vector(grid.size(), 41), random_vector(grid.cutoff_count(), 42)};
  return solve(grid, init, T, o);
}
}  // namespace

TEST_CASE("Chebyshev action matches the matrix exponential") {
  const Eigen::MatrixXcd h = random_hermitian(40, 3);
  const SparseMatrix hs = h.sparseView();
  const CVector x = random_vector(40, 4);
  const double t = 2.3;
  const CVector expect = (cplx(0.0, -t) * h).exp() * x;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const std::pair<double, double> bounds{es.eigenvalues().minCoeff() - 0.1, es.eigenvalues().maxCoeff() + 0.1};
  std::size_t terms = 0;
  CHECK((chebyshev_action(hs, bounds, x, t, 1e-13, 100000, &terms) - expect).norm() < 1e-11);
  CHECK(terms > 0);
  CHECK((dense_action(h, x, t) - expect).norm() < 1e-11);
  CHECK((chebyshev_action(hs, bounds, x, -t, 1e-13, 100000) - (cplx(0.0, t) * h).exp() * x).norm() < 1e-11);
}

TEST_CASE("full evolution methods agree and conserve the norm") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 2, 3);
  const OperatorRep h = build_H(basis, grid, 0.8);
  const QuantumState s = random_state(basis, 9);
  PropagatorConfig poly, dense;
  dense.method = PropagatorConfig::Method::dense_eig;
  const QuantumState a = evolve_full(h, s, 0.9, poly), b = evolve_full(h, s, 0.9, dense);
  CHECK((a.amplitudes - b.amplitudes).norm() < 1e-11);
  CHECK(std::abs(a.norm() - s.norm()) < 1e-12);
  const QuantumState back = evolve_full(h, a, -0.9, poly);
  CHECK((back.amplitudes - s.amplitudes).norm() < 1e-11);
}

TEST_CASE("free evolution is a phase per basis vector") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 2, 2);
  const QuantumState s = random_state(basis, 2);
  const RVector e = free_energies(*basis, grid);
  const double t = 0.61;
  const CVector expect = s.amplitudes.cwiseProduct(CVector((cplx(0.0, -t) * e.cast<cplx>()).array().exp()));
  CHECK((evolve_free(grid, s, t).amplitudes - expect).norm() < 1e-14);
  CHECK((evolve_diagonal(e, s, t).amplitudes - expect).norm() < 1e-14);
}

TEST_CASE("Weyl displacement of the vacuum is the coherent state") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 14, 14);
  const CVector f = 0.6 * random_vector(grid.size(), 5), g = 0.5 * random_vector(grid.cutoff_count(), 6);
  const OperatorRep k = weyl_generator(basis, f, g);
  CHECK(k.hermiticity_residual() < 1e-15);
  const QuantumState c = weyl_displace(f, g, vacuum_state(basis));
  const CoherentState closed = coherent_amplitudes(basis, f, g);
  CHECK((c.amplitudes - closed.state.amplitudes).norm() < 1e-10);
  const QuantumState back = weyl_displace(-f, -g, c);
  CHECK((back.amplitudes - vacuum_state(basis).amplitudes).norm() < 1e-10);
}

TEST_CASE("Dyson series reproduces commuting time dependence") {
  const Eigen::MatrixXcd h = random_hermitian(12, 8);
  const CVector x = random_vector(12, 9);
  TimeGenerator g = [&](double t, const CVector& v, CVector& out) { out = std::cos(t) * (h * v); };
  DysonConfig cfg;
  const double s = 0.2, t = 1.4;
  const CVector expect = (cplx(0.0, -(std::sin(t) - std::sin(s))) * h).exp() * x;
  const DysonResult r = time_ordered(g, x, s, t, cfg);
  CHECK((r.series - expect).norm() < 1e-8);
  CHECK((r.ode - expect).norm() < 1e-8);
  CHECK(r.discrepancy < 1e-8);
  CHECK((dyson_series(g, r.series, t, s, cfg) - x).norm() < 1e-8);
}

TEST_CASE("Dyson series obeys the group law for non-commuting generators") {
  const Eigen::MatrixXcd a = random_hermitian(10, 1), b = random_hermitian(10, 2);
  TimeGenerator g = [&](double t, const CVector& v, CVector& out) { out = a * v + std::sin(3.0 * t) * (b * v); };
  const CVector x = random_vector(10, 3);
  DysonConfig cfg;
  const CVector direct = dyson_series(g, x, 0.0, 1.0, cfg);
  const CVector split = dyson_series(g, dyson_series(g, x, 0.0, 0.35, cfg), 0.35, 1.0, cfg);
  CHECK((direct - split).norm() < 1e-8);
  CHECK(std::abs(direct.norm() - 1.0) < 1e-8);
  const DysonResult r = time_ordered(g, x, 0.0, 1.0, cfg);
  CHECK(r.discrepancy < 1e-8);
}

TEST_CASE("fluctuation propagator is unitary and invertible") {
  const ModeGrid grid(desk_grid());
  const Trajectory traj = reference(grid, 0.5);
  const BasisPtr basis = FockBasis::for_grid(grid, 4, 4);
  const FluctuationGenerator gen(basis, grid);
  const FluctuationPropagator prop(gen, grid, traj);
  const QuantumState s = number_cutoff(random_state(basis, 3), 2);
  const QuantumState n{basis, s.amplitudes / s.norm()};
  DysonConfig cfg;
  const DysonResult fwd = prop.apply(n, 0.5, 0.0, cfg);
  CHECK(fwd.discrepancy < 1e-8);
  CHECK(std::abs(fwd.series.norm() - 1.0) < 1e-9);
  const DysonResult back = prop.apply(QuantumState{basis, fwd.series}, 0.0, 0.5, cfg);
  CHECK((back.series - n.amplitudes).norm() < 1e-8);
  CHECK_THROWS_AS(prop.apply(n, 0.9, 0.0, cfg), ConfigError);
}

TEST_CASE("phase Lambda matches a fine trapezoid rule") {
  const ModeGrid grid(desk_grid());
  const Trajectory traj = reference(grid, 0.5);
  const double lambda = 0.5;
  const PhaseResult r = phase_Lambda(grid, traj, 0.5, 0.0, lambda);
  const std::size_t n = 20000;
  double acc = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const ClassicalState st = traj.at(0.5 * static_cast<double>(k) / n);
    const double v = potential(grid, st.alpha).dot(st.u.cwiseAbs2());
    acc += (k == 0 || k == n ? 0.5 : 1.0) * v;
  }
  const double expect = -0.5 / (lambda * lambda) * acc * 0.5 / n;
  CHECK(r.value == doctest::Approx(expect).epsilon(1e-7));
  CHECK(r.error <= 1e-12);
  CHECK(phase_Lambda(grid, traj, 0.3, 0.3, lambda).value == 0.0);
  CHECK(phase_Lambda(grid, traj, 0.0, 0.5, lambda).value == doctest::Approx(-r.value).epsilon(1e-12));
}

TEST_CASE("W action refuses displacements beyond the caps") {
  const ModeGrid grid(desk_grid());
  const Trajectory traj = reference(grid, 0.5);
  const BasisPtr basis = FockBasis::for_grid(grid, 3, 3);
  const OperatorRep h = build_H(basis, grid, 0.5);
  CHECK_THROWS_AS(build_W_action(grid, h, traj, 0.5, 0.5, 0.0, vacuum_state(basis), true), ConfigError);
  const auto [f, g] = coherent_shift(grid, traj.at(0.25), 0.5);
  CHECK((f - 2.0 * grid.fourier(traj.at(0.25).u)).norm() < 1e-14);
  CHECK((g - 2.0 * traj.at(0.25).alpha).norm() < 1e-14);
}

TEST_CASE("W action is unitary and the identity at equal times") {
  const ModeGrid grid(desk_grid());
  const Trajectory traj = reference(grid, 0.5);
  const BasisPtr basis = FockBasis::for_grid(grid, 16, 16);
  const double lambda = 1.0;
  const OperatorRep h = build_H(basis, grid, lambda);
  const QuantumState omega = vacuum_state(basis);
  const WAction same = build_W_action(grid, h, traj, lambda, 0.2, 0.2, omega, true);
  CHECK((same.state.amplitudes - omega.amplitudes).norm() < 1e-10);
  const WAction w = build_W_action(grid, h, traj, lambda, 0.5, 0.0, omega, true);
  CHECK(w.norm_defect < 1e-9);
  CHECK(w.coherent_tail <= 1e-10);
}

TEST_CASE("H-delta bound follows its closed form") {
  for (double delta : {1.0, 2.0, 4.0})
    for (double integral : {0.0, 0.3}) {
      const double c2 = std::max(4.0, std::pow(3.0, delta / 2.0) + 1.0);
      const double expect = std::exp(0.5 * delta * (std::log(3.0) + std::sqrt(2.0) * c2 * integral));
      CHECK(hdelta_bound(delta, integral) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("free evolution composes by adding times") {
  const ModeGrid grid(desk_grid());
  const BasisPtr basis = FockBasis::for_grid(grid, 3, 3);
  const QuantumState s = random_state(basis, 12);
  const QuantumState two = evolve_free(grid, evolve_free(grid, s, 0.3), 0.45);
  CHECK((two.amplitudes - evolve_free(grid, s, 0.75).amplitudes).norm() < 1e-14);
  const QuantumState omega = vacuum_state(basis);
  CHECK((evolve_free(grid, omega, 2.0).amplitudes - omega.amplitudes).norm() == 0.0);
}

TEST_CASE("fourth-order Dyson substeps reach the same tolerance") {
  const Eigen::MatrixXcd a = random_hermitian(10, 4), b = random_hermitian(10, 5);
  TimeGenerator g = [&](double t, const CVector& v, CVector& out) { out = a * v + std::cos(2.0 * t) * (b * v); };
  const CVector x = random_vector(10, 6);
  DysonConfig low;
  low.order = 4;
  const DysonResult r = time_ordered(g, x, 0.0, 0.8, low);
  CHECK(r.discrepancy < 1e-8);
  CHECK((r.series - dyson_series(g, x, 0.0, 0.8, DysonConfig{})).norm() < 1e-8);
}

TEST_CASE("fluctuation propagator obeys the group law") {
  const ModeGrid grid(desk_grid());
  const Trajectory traj = reference(grid, 0.6);
  const BasisPtr basis = FockBasis::for_grid(grid, 5, 5);
  const FluctuationGenerator gen(basis, grid);
  const FluctuationPropagator prop(gen, grid, traj);
  const QuantumState omega = vacuum_state(basis);
  DysonConfig cfg;
  const DysonResult direct = prop.apply(omega, 0.6, 0.0, cfg);
  const DysonResult first = prop.apply(omega, 0.25, 0.0, cfg);
  const DysonResult second = prop.apply(QuantumState{basis, first.series}, 0.6, 0.25, cfg);
  CHECK((direct.series - second.series).norm() <= 10.0 * cfg.tolerance);
  CHECK((prop.apply(omega, 0.3, 0.3, cfg).series - omega.amplitudes).norm() == 0.0);
}

TEST_CASE("interaction-picture W obeys the group law and inverts") {
  const ModeGrid grid(desk_grid());
  const Trajectory traj = reference(grid, 0.5);
  const BasisPtr basis = FockBasis::for_grid(grid, 16, 16);
  const double lambda = 1.0;
  const OperatorRep h = build_H(basis, grid, lambda);
  const QuantumState s = number_cutoff(random_state(basis, 8), 1);
  const QuantumState x{basis, s.amplitudes / s.norm()};
  const WAction direct = build_W_action(grid, h, traj, lambda, 0.5, 0.0, x, true);
  const WAction first = build_W_action(grid, h, traj, lambda, 0.2, 0.0, x, true);
  const WAction second = build_W_action(grid, h, traj, lambda, 0.5, 0.2, first.state, true);
  CHECK((direct.state.amplitudes - second.state.amplitudes).norm() < 1e-8);
  const WAction back = build_W_action(grid, h, traj, lambda, 0.0, 0.5, direct.state, true);
  CHECK((back.state.amplitudes - x.amplitudes).norm() < 1e-8);
}

TEST_CASE("with the coupling switched off W is the identity in the interaction picture") {
  const ModeGrid grid(desk_grid());
  const ClassicalState start{0.0, random_vector(grid.size(), 3), CVector::Zero(ix(grid.cutoff_count()))};
  Trajectory traj;
  for (int k = 0; k <= 50; ++k) {
    const ClassicalState st = free_evolve(grid, start, 0.01 * k);
    CVector du = grid.fourier(st.u);
    for (std::size_t q = 0; q < grid.size(); ++q) du[ix(q)] *= -kI * grid.kinetic_energy(q);
    traj.states.push_back(st);
    traj.rates.push_back({grid.inverse_fourier(du), CVector::Zero(ix(grid.cutoff_count()))});
  }
  const BasisPtr basis = FockBasis::for_grid(grid, 18, 2);
  const OperatorRep h0 = build_H0(basis, grid);
  const QuantumState x = number_cutoff(random_state(basis, 4), 2);
  const WAction w = build_W_action(grid, h0, traj, 1.0, 0.5, 0.1, x, true);
  CHECK(w.phase == 0.0);
  CHECK((w.state.amplitudes - x.amplitudes).norm() < 1e-9);
}
