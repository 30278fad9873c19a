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

#include <sstream>

#include "nelson/classical.hpp"
#include "support.hpp"

using namespace nelson;
using testing::direct_dft;
using testing::random_vector;

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// Right-hand side written out from the field equations with direct sums.
ClassicalRate oracle_rhs(const ModeGrid& g, const ClassicalState& s) {
  const std::size_t n = g.size();
  CVector uk = direct_dft(g, s.u);
  for (std::size_t m = 0; m < n; ++m) uk[ix(m)] *= g.kinetic_energy(m);
  const CVector kinetic = direct_dft(g, uk, +1);
  ClassicalRate r{CVector(ix(n)), CVector(s.alpha.size())};
  for (std::size_t x = 0; x < n; ++x) {
    cplx sum = 0.0;
    for (std::size_t j = 0; j < g.cutoff_count(); ++j) {
      const double kx = g.momentum(g.cutoff_modes()[j])[0] * g.position(x)[0];
      sum += g.form_factors()[ix(j)] * s.alpha[ix(j)] * std::exp(cplx(0.0, kx));
    }
    const double phi = 2.0 * sum.real();
    r.du[ix(x)] = -kI * (kinetic[ix(x)] + phi * s.u[ix(x)]);
  }
  for (std::size_t j = 0; j < g.cutoff_count(); ++j) {
    const std::size_t k = g.cutoff_modes()[j];
    cplx src = 0.0;
    for (std::size_t x = 0; x < n; ++x)
      src += std::exp(cplx(0.0, -g.momentum(k)[0] * g.position(x)[0])) * std::norm(s.u[ix(x)]);
    r.dalpha[ix(j)] = -kI * (g.dispersion(k) * s.alpha[ix(j)] + g.form_factors()[ix(j)] * src);
  }
  return r;
}

ClassicalState rk4(const ModeGrid& g, ClassicalState s, double T, std::size_t steps) {
  const double h = T / static_cast<double>(steps);
  auto add = [](const ClassicalState& a, const ClassicalRate& k, double c) {
    ClassicalState o = a;
    o.u += c * k.du;
    o.alpha += c * k.dalpha;
    return o;
  };
  for (std::size_t i = 0; i < steps; ++i) {
    const auto k1 = oracle_rhs(g, s);
    const auto k2 = oracle_rhs(g, add(s, k1, h / 2));
    const auto k3 = oracle_rhs(g, add(s, k2, h / 2));
    const auto k4 = oracle_rhs(g, add(s, k3, h));
    s.u += h / 6 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
    s.alpha += h / 6 * (k1.dalpha + 2.0 * k2.dalpha + 2.0 * k3.dalpha + k4.dalpha);
  }
  s.t = T;
  return s;
}

ClassicalState start(const ModeGrid& g, unsigned seed) {
  ClassicalState s;
  s.u = random_vector(g.size(), seed);
  s.alpha = random_vector(g.cutoff_count(), seed + 1);
  return s;
}

double distance(const ClassicalState& a, const ClassicalState& b) {
  return std::sqrt((a.u - b.u).squaredNorm() + (a.alpha - b.alpha).squaredNorm());
}

SolveOptions strang_opts(double dt) {
  SolveOptions o;
  o.dt = dt;
  return o;
}

SolveOptions dopri_opts() {
  SolveOptions o;
  o.method = SolveOptions::Method::dopri;
  return o;
}

}  // namespace

TEST_CASE("rhs agrees with the direct-sum field equations") {
  const ModeGrid g(GridConfig{});
  const ClassicalState s = start(g, 1);
  const ClassicalRate a = rhs(g, s), b = oracle_rhs(g, s);
  CHECK((a.du - b.du).norm() < 1e-12);
  CHECK((a.dalpha - b.dalpha).norm() < 1e-12);
}

TEST_CASE("potential is real and A is its rescaling") {
  const ModeGrid g(GridConfig{});
  const ClassicalState s = start(g, 2);
  const RVector phi = potential(g, s.alpha);
  const RVector A = build_A(g, s.alpha);
  const double scale = g.coupling_constant() * std::pow(static_cast<double>(g.points()), 0.5);
  CHECK((phi - scale * A).norm() < 1e-12);
}

TEST_CASE("Strang and Dormand-Prince agree with an RK4 oracle") {
  const ModeGrid g(GridConfig{});
  const ClassicalState s = start(g, 3);
  const ClassicalState ref = rk4(g, s, 0.5, 5000);
  CHECK(distance(solve(g, s, 0.5, strang_opts(1e-3)).states.back(), ref) < 1e-5);
  CHECK(distance(solve(g, s, 0.5, dopri_opts()).states.back(), ref) < 1e-10);
}

TEST_CASE("charge is conserved by the Strang step") {
  const ModeGrid g(GridConfig{});
  const Trajectory tr = solve(g, start(g, 4), 1.0, strang_opts(1e-3));
  CHECK(tr.max_charge_drift < 1e-12);
}

TEST_CASE("without field modes the flow is the free Schroedinger flow") {
  GridConfig c;
  c.cutoff = 0.0;
  c.exclude_zero_mode = true;
  const ModeGrid g(c);
  REQUIRE(g.cutoff_count() == 0);
  const ClassicalState s = start(g, 5);
  CVector uk = direct_dft(g, s.u);
  for (std::size_t m = 0; m < g.size(); ++m) uk[ix(m)] *= std::exp(-kI * g.kinetic_energy(m) * 0.8);
  const CVector exact = direct_dft(g, uk, +1);
  CHECK((solve(g, s, 0.8, strang_opts(0.1)).states.back().u - exact).norm() < 1e-12);
  CHECK((free_evolve(g, s, 0.8).u - exact).norm() < 1e-12);
  const PicardResult p = picard_solve(g, s, 0.8, PicardOptions{});
  CHECK(p.iterations <= 2);
  CHECK((p.trajectory.states.back().u - exact).norm() < 1e-10);
}

TEST_CASE("Picard fixed point matches the adaptive solution on a short interval") {
  const ModeGrid g(GridConfig{});
  const ClassicalState s = start(g, 6);
  const PicardResult p = picard_solve(g, s, 0.2, PicardOptions{});
  const Trajectory ref = solve(g, s, 0.2, dopri_opts());
  CHECK(distance(p.trajectory.states.back(), ref.states.back()) < 1e-8);
  CHECK(p.contraction < 1.0);
}

TEST_CASE("time reversal is an involution and reverses the flow") {
  const ModeGrid g(GridConfig{});
  const ClassicalState s = start(g, 7);
  CHECK(distance(time_reverse(g, time_reverse(g, s)), s) == 0.0);
  const ClassicalState end = solve(g, s, 0.5, dopri_opts()).states.back();
  const ClassicalState back = time_reverse(g, solve(g, time_reverse(g, end), 0.5, dopri_opts()).states.back());
  CHECK(distance(back, s) < 1e-9);
}

TEST_CASE("trajectory interpolation hits stored states and refuses extrapolation") {
  const ModeGrid g(GridConfig{});
  const Trajectory tr = solve(g, start(g, 8), 0.1, strang_opts(1e-2));
  CHECK(distance(tr.at(tr.states[3].t), tr.states[3]) < 1e-14);
  CHECK_THROWS_AS(tr.at(0.2), ConfigError);
  CHECK(tr.covers(0.05));
}

TEST_CASE("theta family rotates the initial field amplitudes") {
  const ModeGrid g(GridConfig{});
  const ClassicalState s = start(g, 9);
  const ThetaFamily f = solve_theta_family(g, s, 6, 0.05, strang_opts(1e-2));
  REQUIRE(f.members.size() == 6);
  for (std::size_t j = 0; j < 6; ++j)
    CHECK((f.members[j].states.front().alpha - std::exp(-kI * f.thetas[j]) * s.alpha).norm() < 1e-15);
  CHECK_THROWS_AS(solve_theta_family(g, s, 5, 0.05, strang_opts(1e-2)), ConfigError);
}

TEST_CASE("trajectory CSV has a header and one row per stored state") {
  const ModeGrid g(GridConfig{});
  const Trajectory tr = solve(g, start(g, 10), 0.05, strang_opts(1e-2));
  std::ostringstream out;
  write_trajectory_csv(out, g, tr);
  const std::string text = out.str();
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == tr.states.size() + 1);
}
