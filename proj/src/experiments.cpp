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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <random>
#include <sstream>

#include "nelson/classical.hpp"
#include "nelson/fock.hpp"
#include "nelson/hamiltonian.hpp"
#include "nelson/harness.hpp"
#include "nelson/io.hpp"
#include "nelson/observables.hpp"
#include "nelson/propagate.hpp"
#include "nelson/states.hpp"

namespace nelson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// CSV text with a header row and numeric rows.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { write_csv_row(out_, header); }
  Csv& row(const std::vector<double>& values) {
    std::vector<std::string> f;
    for (double v : values) f.push_back(format_double(v));
    write_csv_row(out_, f);
    return *this;
  }
  Csv& row(const std::vector<std::string>& fields) {
    write_csv_row(out_, fields);
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

/// Runs f(0..n-1) with at most `jobs` concurrent tasks; results keep index order.
template <class F>
auto parallel_map(std::size_t n, std::size_t jobs, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(n);
  const auto policy = jobs > 1 ? std::launch::async : std::launch::deferred;
  for (std::size_t start = 0; start < n; start += jobs) {
    std::vector<std::future<R>> pending;
    for (std::size_t i = start; i < std::min(n, start + jobs); ++i) pending.push_back(std::async(policy, f, i));
    for (std::size_t k = 0; k < pending.size(); ++k) out[start + k] = pending[k].get();
  }
  return out;
}

double state_distance(const ClassicalState& a, const ClassicalState& b) {
  return std::sqrt((a.u - b.u).squaredNorm() + (a.alpha - b.alpha).squaredNorm());
}

void check_decreasing(ExperimentOutcome& out, const std::string& what, const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    out.check(what + "[" + std::to_string(i) + "] < " + what + "[" + std::to_string(i - 1) + "]", v[i], -kInf,
              std::nextafter(v[i - 1], -kInf));
}

void fit_rate(ExperimentOutcome& out, const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) return;
  for (double v : y)
    if (!(v > 0.0) || !std::isfinite(v)) return;
  out.result.has_fit = true;
  out.result.fit = rate_fit(x, y);
}

SolveOptions strang(double dt, std::size_t store_every = 1) {
  SolveOptions o;
  o.dt = dt;
  o.store_every = store_every;
  o.max_charge_drift = 1.0;
  return o;
}

SolveOptions dopri(double rtol = 1e-12, double atol = 1e-14) {
  SolveOptions o;
  o.method = SolveOptions::Method::dopri;
  o.rtol = rtol;
  o.atol = atol;
  return o;
}

// ---------------------------------------------------------------- classical

ExperimentOutcome classical_charge(const RunConfig& cfg, std::size_t) {
  const auto& c = cfg.classical;
  ExperimentOutcome out;
  const ModeGrid grid(c.grid);
  const ClassicalState s0 = initial_data(grid, cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.01 / c.dt)));
  const Trajectory tr = solve(grid, s0, c.horizon, strang(c.dt, every));
  out.result.diagnostics["solve_seconds"] = seconds_since(start);
  const double q0 = charge(s0.u);
  Csv csv({"t", "charge", "relative_drift"});
  for (const auto& s : tr.states) csv.row({s.t, charge(s.u), std::abs(charge(s.u) - q0) / q0});
  out.files["classical-charge.csv"] = csv.str();
  std::ostringstream traj;
  write_trajectory_csv(traj, grid, tr);
  out.files["classical-charge-trajectory.csv"] = traj.str();
  out.result.diagnostics["initial_charge"] = q0;
  out.check("max_relative_charge_drift", tr.max_charge_drift, -kInf, c.charge_tolerance);
  return out;
}

ExperimentOutcome classical_order(const RunConfig& cfg, std::size_t jobs) {
  const auto& c = cfg.classical;
  ExperimentOutcome out;
  const ModeGrid grid(c.grid);
  const ClassicalState s0 = initial_data(grid, cfg.seed);
  std::vector<double> dts = c.order_dts;
  const double fine = dts.back() / 8.0;
  dts.push_back(2.0 * fine);
  dts.push_back(fine);
  const auto runs = parallel_map(dts.size(), jobs, [&](std::size_t i) { return solve(grid, s0, c.horizon, strang(dts[i])); });
  const Trajectory& r2 = runs[runs.size() - 2];
  const Trajectory& r1 = runs.back();
  const Trajectory ref_dopri = solve(grid, s0, c.horizon, dopri(1e-13, 1e-15));

  const double coarse = c.order_dts.front();
  const auto n_coarse = static_cast<std::size_t>(std::lround(c.horizon / coarse));
  std::vector<double> errors, dopri_errors;
  for (std::size_t i = 0; i < c.order_dts.size(); ++i) {
    double e = 0.0, ed = 0.0;
    for (std::size_t n = 1; n <= n_coarse; ++n) {
      const double t = std::min(c.horizon, static_cast<double>(n) * coarse);
      const ClassicalState a = runs[i].at(t), f1 = r1.at(t), f2 = r2.at(t);
      ClassicalState rich;
      rich.u = (4.0 * f1.u - f2.u) / 3.0;
      rich.alpha = (4.0 * f1.alpha - f2.alpha) / 3.0;
      e = std::max(e, state_distance(a, rich));
      ed = std::max(ed, state_distance(a, ref_dopri.at(t)));
    }
    errors.push_back(e);
    dopri_errors.push_back(ed);
  }
  Csv csv({"dt", "error_richardson", "ratio_richardson", "error_dopri", "ratio_dopri"});
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double ratio = i == 0 ? std::nan("") : errors[i - 1] / errors[i];
    const double ratio_d = i == 0 ? std::nan("") : dopri_errors[i - 1] / dopri_errors[i];
    csv.row({c.order_dts[i], errors[i], ratio, dopri_errors[i], ratio_d});
    if (i > 0) {
      out.check("error_ratio_dt=" + format_double(c.order_dts[i]), ratio, 3.2, 4.8);
      out.result.diagnostics["dopri_ratio_" + std::to_string(i)] = ratio_d;
    }
  }
  out.files["classical-order.csv"] = csv.str();
  out.result.lambdas = c.order_dts;
  out.result.errors = errors;
  fit_rate(out, c.order_dts, errors);
  return out;
}

ExperimentOutcome classical_picard(const RunConfig& cfg, std::size_t) {
  const auto& c = cfg.classical;
  ExperimentOutcome out;
  const ModeGrid grid(c.grid);
  const ClassicalState s0 = initial_data(grid, cfg.seed);
  const PicardOptions po{c.picard_tolerance, 200, c.picard_intervals};
  const PicardResult pr = picard_solve(grid, s0, c.picard_horizon, po);
  const Trajectory st = solve(grid, s0, c.picard_horizon, strang(c.dt));
  double diff = 0.0;
  Csv csv({"t", "distance"});
  for (const auto& s : pr.trajectory.states) {
    const double d = state_distance(s, st.at(s.t));
    diff = std::max(diff, d);
    csv.row({s.t, d});
  }
  out.files["classical-picard.csv"] = csv.str();
  Csv inc({"iteration", "increment"});
  for (std::size_t k = 0; k < pr.increments.size(); ++k) inc.row({static_cast<double>(k + 1), pr.increments[k]});
  out.files["classical-picard-increments.csv"] = inc.str();

  const double bound = 10.0 * (c.picard_tolerance + c.dt * c.dt);
  out.check("sup_distance_picard_vs_strang", diff, -kInf, bound);
  out.result.diagnostics["iterations"] = static_cast<double>(pr.iterations);
  out.result.diagnostics["contraction"] = pr.contraction;
  std::vector<double> contractions{pr.contraction};
  for (double scale : {0.5, 0.25})
    contractions.push_back(picard_solve(grid, s0, scale * c.picard_horizon, po).contraction);
  for (std::size_t i = 0; i < contractions.size(); ++i)
    out.result.diagnostics["contraction_" + std::to_string(i)] = contractions[i];
  check_decreasing(out, "contraction", contractions);
  return out;
}

ExperimentOutcome classical_continuity(const RunConfig& cfg, std::size_t jobs) {
  const auto& c = cfg.classical;
  ExperimentOutcome out;
  const ModeGrid grid(c.grid);
  const ClassicalState s0 = initial_data(grid, cfg.seed);
  const ClassicalState dir = initial_data(grid, cfg.seed + 7);
  const std::size_t every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.01 / c.dt)));
  const Trajectory base = solve(grid, s0, c.horizon, strang(c.dt, every));
  const auto dist = parallel_map(c.continuity_eps.size(), jobs, [&](std::size_t i) {
    ClassicalState p = s0;
    p.alpha += c.continuity_eps[i] * dir.alpha;
    const Trajectory tr = solve(grid, p, c.horizon, strang(c.dt, every));
    double d = 0.0;
    for (std::size_t k = 0; k < tr.states.size(); ++k) d = std::max(d, state_distance(tr.states[k], base.states[k]));
    return d;
  });
  Csv csv({"epsilon", "sup_distance"});
  for (std::size_t i = 0; i < dist.size(); ++i) csv.row({c.continuity_eps[i], dist[i]});
  out.files["classical-continuity.csv"] = csv.str();
  out.result.lambdas = c.continuity_eps;
  out.result.errors = dist;
  fit_rate(out, c.continuity_eps, dist);
  check_decreasing(out, "sup_distance", dist);
  return out;
}

ExperimentOutcome classical_reversal(const RunConfig& cfg, std::size_t) {
  const auto& c = cfg.classical;
  ExperimentOutcome out;
  const ModeGrid grid(c.grid);
  const ClassicalState s0 = initial_data(grid, cfg.seed);
  const Trajectory fwd = solve(grid, s0, c.horizon, strang(c.dt));
  const Trajectory back = solve(grid, time_reverse(grid, fwd.states.back()), c.horizon, strang(c.dt));
  const ClassicalState recovered = time_reverse(grid, back.states.back());
  const double reversal = state_distance(recovered, s0);
  const Trajectory ref = solve(grid, s0, c.horizon, dopri(1e-13, 1e-15));
  const double one_way = state_distance(fwd.states.back(), ref.states.back());
  Csv csv({"reversal_error", "one_way_error"});
  csv.row({reversal, one_way});
  out.files["classical-reversal.csv"] = csv.str();
  out.check("reversal_error", reversal, -kInf, 10.0 * one_way);
  return out;
}

// ---------------------------------------------------------------- operators

/// Dense ladder matrices assembled from occupation vectors, independent of the sparse builders.
struct DenseLadders {
  std::vector<Eigen::MatrixXcd> psi, a;  // annihilators
};

DenseLadders dense_ladders(const FockBasis& B) {
  DenseLadders d;
  const auto n = ix(B.size());
  auto build = [&](Species s, std::size_t mode) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < B.size(); ++i) {
      std::vector<int> op = B.psi().unrank(B.psi_local(i)), oa = B.a().unrank(B.a_local(i));
      std::vector<int>& o = s == Species::psi ? op : oa;
      const int occ = o[mode];
      if (occ == 0) continue;
      o[mode] -= 1;
      const std::size_t target = B.index(B.psi().rank(op), B.a().rank(oa));
      m(ix(target), ix(i)) = std::sqrt(static_cast<double>(occ));
    }
    return m;
  };
  for (std::size_t q = 0; q < B.psi().modes(); ++q) d.psi.push_back(build(Species::psi, q));
  for (std::size_t j = 0; j < B.a().modes(); ++j) d.a.push_back(build(Species::a, j));
  return d;
}

ExperimentOutcome ccr(const RunConfig& cfg, std::size_t) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const ModeGrid grid(q.grid);
  const BasisPtr basis = FockBasis::for_grid(grid, q.ccr_psi_cap, q.ccr_a_cap);
  const FockBasis& B = *basis;
  out.result.diagnostics["dimension"] = static_cast<double>(B.size());

  QuantumState interior = random_state(basis, cfg.seed);
  for (std::size_t i = 0; i < B.size(); ++i)
    if (B.n1(i) >= B.psi().cap() || B.n2(i) >= B.a().cap()) interior.amplitudes[ix(i)] = 0.0;
  interior.amplitudes.normalize();
  const QuantumState full = random_state(basis, cfg.seed + 1);

  Csv csv({"species", "i", "j", "residual_interior", "residual_full"});
  double worst = 0.0, worst_full = 0.0;
  for (Species s : {Species::psi, Species::a}) {
    const std::size_t m = B.species(s).modes();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double r = commutator_check(s, i, j, interior);
        const double rf = commutator_check(s, i, j, full);
        worst = std::max(worst, r);
        worst_full = std::max(worst_full, rf);
        csv.row(std::vector<std::string>{s == Species::psi ? "psi" : "a", std::to_string(i), std::to_string(j),
                                         format_double(r), format_double(rf)});
      }
  }
  out.files["ccr.csv"] = csv.str();
  out.check("ccr_residual_away_from_caps", worst, -kInf, 1e-12);
  out.result.diagnostics["ccr_residual_at_caps"] = worst_full;

  const QuantumState phi = random_state(basis, cfg.seed + 2), chi = random_state(basis, cfg.seed + 3);
  double adj = 0.0;
  for (Species s : {Species::psi, Species::a})
    for (std::size_t m = 0; m < B.species(s).modes(); ++m) {
      const cplx lhs = inner(phi, apply_ladder(s, Ladder::annihilate, m, chi).state);
      const cplx rhs = inner(apply_ladder(s, Ladder::create, m, phi).state, chi);
      adj = std::max(adj, std::abs(lhs - rhs));
    }
  out.check("adjointness_residual", adj, -kInf, 1e-12);
  return out;
}

ExperimentOutcome sparse_dense(const RunConfig& cfg, std::size_t) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const ModeGrid grid(q.grid);
  std::size_t pc = 1, ac = 1;
  while (FockBasis(grid.size(), pc + 1, grid.cutoff_count(), ac + 1).size() <= 200) ++pc, ++ac;
  const BasisPtr basis = FockBasis::for_grid(grid, pc, ac);
  const FockBasis& B = *basis;
  const auto n = ix(B.size());
  out.result.diagnostics["dimension"] = static_cast<double>(B.size());
  const DenseLadders L = dense_ladders(B);
  const double lambda = q.lambdas.front();

  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t m = 0; m < grid.size(); ++m)
    H += grid.kinetic_energy(m) * L.psi[m].adjoint() * L.psi[m];
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j)
    H += grid.dispersion(grid.cutoff_modes()[j]) * L.a[j].adjoint() * L.a[j];
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j) {
    const std::size_t k = grid.cutoff_modes()[j];
    for (std::size_t m = 0; m < grid.size(); ++m)
      X += lambda * grid.form_factor(k) * L.a[j] * L.psi[grid.shift(m, k, +1)].adjoint() * L.psi[m];
  }
  H += X + X.adjoint();
  const double h_err = (build_H(basis, grid, lambda).dense() - H).cwiseAbs().maxCoeff();
  out.check("H_sparse_vs_dense", h_err, -kInf, 1e-14);

  const ClassicalState s = initial_data(grid, cfg.seed);
  const CVector uh = grid.fourier(s.u);
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j) {
    const std::size_t k = grid.cutoff_modes()[j];
    const double f0 = grid.form_factor(k);
    for (std::size_t m = 0; m < grid.size(); ++m) {
      Y += f0 * s.alpha[ix(j)] * L.psi[grid.shift(m, k, +1)].adjoint() * L.psi[m];
      Y += f0 * uh[ix(m)] * L.psi[grid.shift(m, k, +1)].adjoint() * L.a[j];
      Y += f0 * uh[ix(m)] * L.psi[grid.shift(m, k, -1)].adjoint() * L.a[j].adjoint();
    }
  }
  const Eigen::MatrixXcd V = Y + Y.adjoint();
  const double v_err = (build_V(basis, grid, s).dense() - V).cwiseAbs().maxCoeff();
  out.check("V_sparse_vs_dense", v_err, -kInf, 1e-14);

  Csv csv({"operator", "dimension", "max_abs_difference"});
  csv.row(std::vector<std::string>{"H", std::to_string(B.size()), format_double(h_err)});
  csv.row(std::vector<std::string>{"V", std::to_string(B.size()), format_double(v_err)});
  out.files["sparse-dense.csv"] = csv.str();
  return out;
}

// ---------------------------------------------------------------- shared quantum setup

struct QuantumSetup {
  ModeGrid grid;
  ClassicalState initial;  // positions for u, slots for alpha
  CVector u_hat;           // mode-space u0
  Trajectory trajectory;   // high-accuracy reference up to the largest requested time
};

QuantumSetup quantum_setup(const RunConfig& cfg, double horizon) {
  QuantumSetup s{ModeGrid(cfg.quantum.grid), {}, {}, {}};
  s.initial = initial_data(s.grid, cfg.seed);
  s.u_hat = s.grid.fourier(s.initial.u);
  s.trajectory = solve(s.grid, s.initial, horizon, dopri());
  return s;
}

std::size_t lambda_particles(double lambda) {
  const double x = 1.0 / (lambda * lambda);
  const double r = std::round(x);
  require(r >= 1.0 && std::abs(x - r) <= 1e-9 * r, "lambda^{-2} must be a positive integer for this family");
  return static_cast<std::size_t>(r);
}

std::size_t state_index(const FockBasis& B, std::vector<int> psi, std::vector<int> a) {
  return B.index(B.psi().rank(psi), B.a().rank(a));
}

std::vector<int> unit_occupation(std::size_t modes, std::size_t which) {
  std::vector<int> o(modes, 0);
  o[which] = 1;
  return o;
}

CVector random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CVector v(ix(n));
  for (auto& z : v) z = cplx(normal(rng), normal(rng));
  return v / v.norm();
}

/// Random state supported on N1 + N2 <= 2.
QuantumState low_state(const BasisPtr& basis, std::uint64_t seed) {
  QuantumState s = random_state(basis, seed);
  for (std::size_t i = 0; i < basis->size(); ++i)
    if (basis->n1(i) + basis->n2(i) > 2) s.amplitudes[ix(i)] = 0.0;
  s.amplitudes.normalize();
  return s;
}

/// Fixed two-quantum test state (psi*_0 a*_0 + i psi*_1 psi*_2) Omega / sqrt 2.
QuantumState two_quantum(const BasisPtr& basis) {
  const FockBasis& B = *basis;
  const std::size_t mp = B.psi().modes(), ma = B.a().modes();
  QuantumState s = zero_state(basis);
  s.amplitudes[ix(state_index(B, unit_occupation(mp, 0), unit_occupation(ma, 0)))] = 1.0 / std::sqrt(2.0);
  std::vector<int> two = unit_occupation(mp, 1);
  two[2 % mp] += 1;
  s.amplitudes[ix(state_index(B, two, std::vector<int>(ma, 0)))] = cplx(0.0, 1.0 / std::sqrt(2.0));
  return s;
}

/// Weight on the outermost sectors, a cheap truncation diagnostic.
double edge_weight(const QuantumState& s) {
  const FockBasis& B = *s.basis;
  double w = 0.0;
  for (std::size_t i = 0; i < B.size(); ++i)
    if (B.n1(i) == B.psi().cap() || B.n2(i) == B.a().cap()) w += std::norm(s.amplitudes[ix(i)]);
  return std::sqrt(w);
}

DysonConfig dyson_config(const RunConfig& cfg) {
  DysonConfig d;
  d.tolerance = cfg.quantum.dyson_tolerance;
  d.order = cfg.quantum.dyson_order;
  return d;
}

PropagatorConfig propagator_config(const RunConfig& cfg) {
  PropagatorConfig p;
  p.tolerance = cfg.quantum.propagator_tolerance;
  return p;
}

double max_time(const RunConfig& cfg) {
  return std::max(cfg.quantum.time, cfg.quantum.times.empty() ? 0.0 : cfg.quantum.times.back());
}

/// Caps sized so the coherent displacement by (u0, alpha0)/lambda plus `extra` quanta has tails below tolerance.
std::pair<std::size_t, std::size_t> coherent_caps(const RunConfig& cfg, const QuantumSetup& s, double lambda,
                                                  std::size_t extra) {
  const auto& q = cfg.quantum;
  const double l2 = lambda * lambda;
  return {required_cap(s.u_hat.squaredNorm() / l2, q.tail_tolerance) + q.psi_margin + extra,
          required_cap(s.initial.alpha.squaredNorm() / l2, q.tail_tolerance) + q.a_margin + extra};
}

// ---------------------------------------------------------------- structural zeros

NormalOrderSpec random_spec(std::size_t pc, std::size_t pa, std::size_t ac, std::size_t aa, const ModeGrid& grid,
                            std::mt19937_64& rng) {
  NormalOrderSpec s;
  for (std::size_t k = 0; k < pc; ++k) s.psi_create.push_back(random_unit(grid.size(), rng));
  for (std::size_t k = 0; k < pa; ++k) s.psi_annihilate.push_back(random_unit(grid.size(), rng));
  for (std::size_t k = 0; k < ac; ++k) s.a_create.push_back(random_unit(grid.cutoff_count(), rng));
  for (std::size_t k = 0; k < aa; ++k) s.a_annihilate.push_back(random_unit(grid.cutoff_count(), rng));
  return s;
}

ExperimentOutcome structural_zeros(const RunConfig& cfg, std::size_t) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const QuantumSetup s = quantum_setup(cfg, q.time);
  const ModeGrid& grid = s.grid;

  const BasisPtr small = FockBasis::for_grid(grid, 4, 6);
  const OperatorRep H = build_H(small, grid, q.lambdas.front());
  const SparseMatrix c1 = commutator(H.matrix, build_number(small, Species::psi).matrix);
  double c1_max = 0.0;
  for (int k = 0; k < c1.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(c1, k); it; ++it) c1_max = std::max(c1_max, std::abs(it.value()));
  out.check("max_abs_[H,N1]", c1_max, -kInf, 0.0);
  const SparseMatrix c2 = commutator(H.matrix, build_number(small, Species::a).matrix);
  QuantumState w = zero_state(small);
  w.amplitudes[ix(state_index(*small, unit_occupation(grid.size(), 0), std::vector<int>(grid.cutoff_count(), 0)))] =
      1.0;
  const double witness = (c2 * w.amplitudes).norm();
  out.check("norm_[H,N2]_witness", witness, 1e-6, kInf);

  const double lambda = 1.0 / std::sqrt(2.0);
  const std::size_t i = lambda_particles(lambda);
  std::mt19937_64 rng(cfg.seed + 11);
  const std::vector<std::array<std::size_t, 4>> shapes{{1, 0, 0, 0}, {0, 1, 0, 1}, {2, 1, 1, 0}, {1, 2, 0, 0}, {0, 2, 1, 1}};
  std::vector<NormalOrderSpec> specs;
  for (const auto& sh : shapes) specs.push_back(random_spec(sh[0], sh[1], sh[2], sh[3], grid, rng));

  Csv csv({"family", "q", "r", "h", "l", "abs_value"});
  double worst = 0.0;
  for (const auto family : {StateSpec::Family::Psi, StateSpec::Family::Theta}) {
    const bool theta = family == StateSpec::Family::Theta;
    const std::size_t a_cap =
        theta ? i + q.residue_a_margin
              : required_cap(static_cast<double>(i), q.identity_tail) + q.a_margin;
    const BasisPtr basis = FockBasis::for_grid(grid, i, a_cap);
    StateSpec spec;
    spec.family = family;
    spec.u0 = s.u_hat;
    spec.alpha0 = s.initial.alpha;
    spec.lambda = lambda;
    spec.tail_tolerance = q.identity_tail;
    const QuantumState x0 = build_state(basis, spec);
    const QuantumState xt = evolve_full(build_H(basis, grid, lambda), x0, q.time, propagator_config(cfg));
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const double v = std::abs(normal_ordered_average(xt, specs[k], lambda));
      worst = std::max(worst, v);
      csv.row(std::vector<std::string>{theta ? "Theta" : "Psi", std::to_string(shapes[k][0]),
                                       std::to_string(shapes[k][1]), std::to_string(shapes[k][2]),
                                       std::to_string(shapes[k][3]), format_double(v)});
    }
  }
  out.files["structural-zeros.csv"] = csv.str();
  out.check("max_abs_average_q!=r", worst, -kInf, 0.0);
  return out;
}

// ---------------------------------------------------------------- theta identity

ExperimentOutcome theta_identity(const RunConfig& cfg, std::size_t jobs) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const ModeGrid grid(q.grid);
  const ClassicalState init = initial_data(grid, cfg.seed);
  const CVector u0 = grid.fourier(init.u);
  struct Row {
    std::size_t cap = 0;
    ThetaIdentity id, naive;
    double orth0 = 0.0, orth1 = 0.0;
  };
  const auto rows = parallel_map(q.identity_particles.size(), jobs, [&](std::size_t k) {
    const std::size_t x = q.identity_particles[k];
    const double lambda = 1.0 / std::sqrt(static_cast<double>(x));
    Row r;
    r.cap = std::max(x, required_cap(static_cast<double>(x), 0.5 * q.identity_tail));
    const BasisPtr basis = FockBasis::for_grid(grid, r.cap, r.cap);
    r.id = theta_identity_check(basis, u0, init.alpha, lambda, alias_free_theta_count(x, r.cap));
    r.naive = theta_identity_check(basis, u0, init.alpha, lambda, std::max<std::size_t>(4, 8 * x));
    r.orth0 = displaced_one_particle_residual(u0, init.alpha, lambda, 0.0);
    r.orth1 = displaced_one_particle_residual(u0, init.alpha, lambda, 0.9);
    return r;
  });
  Csv csv({"x", "cap", "n_theta", "projection_residual", "quadrature_residual", "tail", "residual_8x",
           "orthogonality_theta0", "orthogonality_theta1"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const std::string x = std::to_string(q.identity_particles[k]);
    csv.row({static_cast<double>(q.identity_particles[k]), static_cast<double>(r.cap),
             static_cast<double>(r.id.n_theta), r.id.projection_residual, r.id.quadrature_residual, r.id.tail,
             r.naive.residual(), r.orth0, r.orth1});
    out.check("identity_residual_x=" + x, r.id.residual(), -kInf, 1e-10);
    out.check("coherent_tail_x=" + x, r.id.tail, -kInf, q.identity_tail);
    out.check("one_particle_orthogonality_x=" + x, std::max(r.orth0, r.orth1), -kInf, 1e-8);
  }
  out.files["theta-identity.csv"] = csv.str();
  return out;
}

// ---------------------------------------------------------------- theta residue

ExperimentOutcome theta_residue(const RunConfig& cfg, std::size_t jobs) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const QuantumSetup s = quantum_setup(cfg, q.time);
  const ModeGrid& grid = s.grid;
  NormalOrderSpec spec;
  spec.psi_create.push_back(s.u_hat);
  spec.psi_annihilate.push_back(s.u_hat);
  spec.a_annihilate.push_back(s.initial.alpha);

  const ThetaFamily family = solve_theta_family(grid, s.initial, q.theta_samples, q.time, dopri(), jobs);
  const ThetaAverage avg = classical_prediction(grid, spec, family, q.time);
  const cplx naive = classical_product(grid, spec, family.members.front().at(q.time));

  struct Row {
    cplx value;
    double edge = 0.0;
    std::size_t dim = 0;
  };
  const auto rows = parallel_map(q.residue_particles.size(), jobs, [&](std::size_t k) {
    const std::size_t i = q.residue_particles[k];
    const double lambda = 1.0 / std::sqrt(static_cast<double>(i));
    const BasisPtr basis = FockBasis::for_grid(grid, i, i + q.residue_a_margin);
    StateSpec st;
    st.family = StateSpec::Family::Theta;
    st.u0 = s.u_hat;
    st.alpha0 = s.initial.alpha;
    st.lambda = lambda;
    const QuantumState xt = evolve_full(build_H(basis, grid, lambda), build_state(basis, st), q.time,
                                        propagator_config(cfg));
    return Row{normal_ordered_average(xt, spec, lambda), a_number_project(xt, basis->a().cap()).norm(),
               basis->size()};
  });

  Csv csv({"i", "dimension", "quantum_re", "quantum_im", "theta_avg_re", "theta_avg_im", "naive_re", "naive_im",
           "abs_residual", "edge_weight"});
  std::vector<double> residues, lambdas;
  double edge = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double r = std::abs(rows[k].value - avg.value);
    residues.push_back(r);
    lambdas.push_back(1.0 / std::sqrt(static_cast<double>(q.residue_particles[k])));
    edge = std::max(edge, rows[k].edge);
    csv.row({static_cast<double>(q.residue_particles[k]), static_cast<double>(rows[k].dim), rows[k].value.real(),
             rows[k].value.imag(), avg.value.real(), avg.value.imag(), naive.real(), naive.imag(), r, rows[k].edge});
  }
  out.files["theta-residue.csv"] = csv.str();
  check_decreasing(out, "abs_quantum_minus_theta_average", residues);
  const double margin = std::abs(avg.value - naive);
  out.check("theta_average_vs_naive_margin", margin, 1e-6, kInf);
  out.check("theta_quadrature_refinement_change", avg.change, -kInf, 1e-8);
  out.check("a_cap_edge_weight", edge, -kInf, 1e-8);
  out.result.lambdas = lambdas;
  out.result.errors = residues;
  fit_rate(out, lambdas, residues);
  out.result.diagnostics["naive_margin"] = margin;
  return out;
}

// ---------------------------------------------------------------- fluctuation dynamics

struct FluctSetup {
  QuantumSetup q;
  BasisPtr basis;
  std::unique_ptr<FluctuationGenerator> gen;
  std::unique_ptr<FluctuationPropagator> prop;
};

std::unique_ptr<FluctSetup> fluct_setup(const RunConfig& cfg, std::size_t psi_cap, std::size_t a_cap) {
  auto f = std::make_unique<FluctSetup>(FluctSetup{quantum_setup(cfg, max_time(cfg)), {}, {}, {}});
  f->basis = FockBasis::for_grid(f->q.grid, psi_cap, a_cap);
  f->gen = std::make_unique<FluctuationGenerator>(f->basis, f->q.grid);
  f->prop = std::make_unique<FluctuationPropagator>(*f->gen, f->q.grid, f->q.trajectory);
  return f;
}

ExperimentOutcome one_particle(const RunConfig& cfg, std::size_t jobs) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const auto f = fluct_setup(cfg, q.one_particle_psi_cap, q.one_particle_a_cap);
  const ModeGrid& grid = f->q.grid;
  const DysonConfig dc = dyson_config(cfg);
  out.result.diagnostics["dimension"] = static_cast<double>(f->basis->size());

  std::vector<std::array<CVector, 4>> panel;
  std::mt19937_64 rng(cfg.seed + 23);
  for (std::size_t k = 0; k < q.panel; ++k)
    panel.push_back({random_unit(grid.size(), rng), random_unit(grid.size(), rng),
                     random_unit(grid.cutoff_count(), rng), random_unit(grid.cutoff_count(), rng)});

  struct Row {
    double residual = 0.0, leakage = 0.0, discrepancy = 0.0;
  };
  const QuantumState omega = vacuum_state(f->basis);
  std::vector<Row> rows;
  Csv csv({"t", "g", "residual", "leakage", "dyson_ode_discrepancy"});
  double worst = 0.0;
  std::vector<double> times(q.times);
  std::sort(times.begin(), times.end());
  QuantumState xt = omega;
  double reached = 0.0;
  for (double t : times) {
    if (t > 1.0) continue;
    const DysonResult fwd = f->prop->apply(xt, t, reached, dc);
    xt = QuantumState{f->basis, fwd.series};
    reached = t;
    const auto panel_rows = parallel_map(panel.size(), jobs, [&](std::size_t k) {
      const auto& g = panel[k];
      double leak = 0.0;
      CVector y = CVector::Zero(ix(f->basis->size()));
      const std::array<std::pair<Species, Ladder>, 4> parts{{{Species::psi, Ladder::create},
                                                             {Species::psi, Ladder::annihilate},
                                                             {Species::a, Ladder::create},
                                                             {Species::a, Ladder::annihilate}}};
      for (std::size_t p = 0; p < 4; ++p) {
        const LadderResult r = apply_field(parts[p].first, parts[p].second, g[p], xt);
        y += r.state.amplitudes;
        leak += r.leakage;
      }
      const DysonResult back = f->prop->apply(QuantumState{f->basis, y}, 0.0, t, dc);
      const QuantumState z{f->basis, back.series};
      return Row{(z.amplitudes - one_particle_project(z).amplitudes).norm(), std::sqrt(leak),
                 std::max(fwd.discrepancy, back.discrepancy)};
    });
    for (std::size_t k = 0; k < panel_rows.size(); ++k) {
      const Row& r = panel_rows[k];
      worst = std::max(worst, r.residual);
      csv.row({t, static_cast<double>(k), r.residual, r.leakage, r.discrepancy});
    }
  }
  out.files["one-particle.csv"] = csv.str();
  out.check("max_residual_outside_one_particle", worst, -kInf, 1e-6);
  return out;
}

/// int_0^t ||v--(tau)||_2 dtau by composite Simpson on the reference trajectory.
double kernel_integral(const QuantumSetup& s, double t) {
  const std::size_t n = 200;
  const double h = t / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * kernel_norm(fluctuation_kernels(s.grid, s.trajectory.at(h * static_cast<double>(k)).u).mm);
  }
  return acc * h / 3.0;
}

ExperimentOutcome hdelta(const RunConfig& cfg, std::size_t jobs) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const auto f = fluct_setup(cfg, q.fluct_psi_cap, q.fluct_a_cap);
  const DysonConfig dc = dyson_config(cfg);

  std::vector<QuantumState> panel;
  panel.push_back(vacuum_state(f->basis));
  panel.push_back(two_quantum(f->basis));
  for (std::size_t k = 2; k < q.panel; ++k) panel.push_back(low_state(f->basis, cfg.seed + 31 + k));

  struct Row {
    std::vector<QuantumState> states;  // one per time
  };
  const auto evolved = parallel_map(panel.size(), jobs, [&](std::size_t k) {
    Row r;
    QuantumState x = panel[k];
    double from = 0.0;
    for (double t : q.times) {
      x = QuantumState{f->basis, f->prop->apply(x, t, from, dc).series};
      from = t;
      r.states.push_back(x);
    }
    return r;
  });

  Csv csv({"delta", "t", "state", "ratio", "bound", "edge_weight"});
  double worst = 0.0, edge = 0.0;
  for (std::size_t m = 0; m < q.times.size(); ++m) {
    const double kint = kernel_integral(f->q, q.times[m]);
    for (double delta : q.deltas) {
      const double bound = hdelta_bound(delta, kint);
      for (std::size_t k = 0; k < panel.size(); ++k) {
        const QuantumState& x = evolved[k].states[m];
        const double ratio = number_norm(x, delta) / number_norm(panel[k], delta);
        worst = std::max(worst, ratio / bound);
        edge = std::max(edge, edge_weight(x));
        csv.row({delta, q.times[m], static_cast<double>(k), ratio, bound, edge_weight(x)});
      }
    }
  }
  out.files["hdelta-bound.csv"] = csv.str();
  out.check("max_ratio_over_bound", worst, -kInf, 1.0);
  out.result.diagnostics["max_edge_weight"] = edge;
  return out;
}

ExperimentOutcome dyson_cross(const RunConfig& cfg, std::size_t jobs) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const auto f = fluct_setup(cfg, q.fluct_psi_cap, q.fluct_a_cap);
  const DysonConfig dc = dyson_config(cfg);
  const std::vector<QuantumState> panel{two_quantum(f->basis), low_state(f->basis, cfg.seed + 41)};
  struct Row {
    std::vector<double> discrepancy, unitarity, group;
    std::vector<std::size_t> substeps;
  };
  const auto rows = parallel_map(panel.size(), jobs, [&](std::size_t k) {
    Row r;
    for (double t : q.times) {
      const DysonResult d = f->prop->apply(panel[k], t, 0.0, dc);
      r.discrepancy.push_back(d.discrepancy);
      r.unitarity.push_back(std::abs(d.series.norm() - panel[k].norm()));
      r.substeps.push_back(d.substeps);
      const double mid = 0.5 * t;
      const DysonResult a = f->prop->apply(panel[k], mid, 0.0, dc);
      const DysonResult b = f->prop->apply(QuantumState{f->basis, a.series}, t, mid, dc);
      r.group.push_back((b.series - d.series).norm());
    }
    return r;
  });
  Csv csv({"state", "t", "series_vs_ode", "unitarity_defect", "group_law_defect", "substeps"});
  double disc = 0.0, unit = 0.0, group = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t m = 0; m < q.times.size(); ++m) {
      disc = std::max(disc, rows[k].discrepancy[m]);
      unit = std::max(unit, rows[k].unitarity[m]);
      group = std::max(group, rows[k].group[m]);
      csv.row({static_cast<double>(k), q.times[m], rows[k].discrepancy[m], rows[k].unitarity[m], rows[k].group[m],
               static_cast<double>(rows[k].substeps[m])});
    }
  out.files["dyson-cross.csv"] = csv.str();
  out.check("series_vs_ode", disc, -kInf, q.dyson_tolerance);
  out.check("unitarity_defect", unit, -kInf, q.dyson_tolerance);
  out.check("group_law_defect", group, -kInf, 10.0 * q.dyson_tolerance);
  return out;
}

ExperimentOutcome strong_limit(const RunConfig& cfg, std::size_t jobs) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const auto f = fluct_setup(cfg, q.fluct_psi_cap, q.fluct_a_cap);
  const QuantumState phi = two_quantum(f->basis);
  const DysonResult u2 = f->prop->apply(phi, q.time, 0.0, dyson_config(cfg));
  const QuantumState u2phi{f->basis, u2.series};

  struct Row {
    double difference = 0.0, tail = 0.0, defect = 0.0;
    std::size_t dim = 0;
  };
  const auto rows = parallel_map(q.lambdas.size(), jobs, [&](std::size_t k) {
    const double lambda = q.lambdas[k];
    const auto [pc, ac] = coherent_caps(cfg, f->q, lambda, 2);
    const BasisPtr big = FockBasis::for_grid(f->q.grid, pc, ac);
    const OperatorRep H = build_H(big, f->q.grid, lambda);
    const WAction w = build_W_action(f->q.grid, H, f->q.trajectory, lambda, q.time, 0.0, embed(phi, big), true,
                                     propagator_config(cfg), q.tail_tolerance);
    return Row{(w.state.amplitudes - embed(u2phi, big).amplitudes).norm(), w.coherent_tail, w.norm_defect,
               big->size()};
  });
  Csv csv({"lambda", "dimension", "difference", "coherent_tail", "norm_defect"});
  std::vector<double> diffs;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    diffs.push_back(rows[k].difference);
    csv.row({q.lambdas[k], static_cast<double>(rows[k].dim), rows[k].difference, rows[k].tail, rows[k].defect});
    out.check("coherent_tail_lambda=" + format_double(q.lambdas[k]), rows[k].tail, -kInf, q.tail_tolerance);
  }
  out.files["strong-limit.csv"] = csv.str();
  check_decreasing(out, "difference", diffs);
  out.result.lambdas = q.lambdas;
  out.result.errors = diffs;
  fit_rate(out, q.lambdas, diffs);
  return out;
}

ExperimentOutcome w_cross(const RunConfig& cfg, std::size_t) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const double lambda = q.lambdas.front();
  const QuantumSetup s = quantum_setup(cfg, q.time);
  const auto [pc, ac] = coherent_caps(cfg, s, lambda, 2);
  const BasisPtr big = FockBasis::for_grid(s.grid, pc, ac);
  const OperatorRep H = build_H(big, s.grid, lambda);
  Csv csv({"psi_cap", "a_cap", "difference", "discarded"});
  std::vector<double> diffs;
  for (std::size_t shrink : {2, 0}) {
    const BasisPtr small = FockBasis::for_grid(s.grid, q.fluct_psi_cap - shrink, q.fluct_a_cap - shrink);
    const QuantumState phi = two_quantum(small);
    const WAction w =
        build_W_action(s.grid, H, s.trajectory, lambda, q.time, 0.0, embed(phi, big), true, propagator_config(cfg),
                       q.tail_tolerance);
    double discarded = 0.0;
    const QuantumState direct = embed(w.state, small, &discarded);
    const FluctuationGenerator gen(small, s.grid);
    const CVector via = W_tilde_from_generator(gen, build_HI(small, s.grid, lambda), s.grid, s.trajectory, q.time,
                                               0.0, phi.amplitudes);
    diffs.push_back((via - direct.amplitudes).norm());
    csv.row({static_cast<double>(small->psi().cap()), static_cast<double>(small->a().cap()), diffs.back(),
             std::sqrt(discarded)});
  }
  out.files["w-cross.csv"] = csv.str();
  check_decreasing(out, "direct_vs_generator", diffs);
  out.check("direct_vs_generator_final", diffs.back(), -kInf, 5e-3);
  return out;
}

// ---------------------------------------------------------------- rates

ExperimentOutcome rates(const RunConfig& cfg, std::size_t jobs, bool vacuum) {
  const auto& q = cfg.quantum;
  ExperimentOutcome out;
  const QuantumSetup s = quantum_setup(cfg, q.time);
  const ModeGrid& grid = s.grid;
  const CVector u_t = grid.fourier(s.trajectory.at(q.time).u);
  const CVector alpha_t = s.trajectory.at(q.time).alpha;

  struct Row {
    double psi_error = 0.0, a_error = 0.0, tail = 0.0;
    std::size_t dim = 0;
  };
  const auto rows = parallel_map(q.lambdas.size(), jobs, [&](std::size_t k) {
    const double lambda = q.lambdas[k];
    const auto [pc, ac] = coherent_caps(cfg, s, lambda, vacuum ? 0 : 1);
    const BasisPtr basis = FockBasis::for_grid(grid, pc, ac);
    QuantumState phi = vacuum_state(basis);
    if (!vacuum) {
      phi.amplitudes[0] = 0.8;
      phi.amplitudes[ix(state_index(*basis, unit_occupation(grid.size(), 1 % grid.size()),
                                    std::vector<int>(grid.cutoff_count(), 0)))] = cplx(0.0, 0.6);
    }
    const double l2 = lambda * lambda;
    const double tail = coherent_tail(s.u_hat.squaredNorm() / l2, s.initial.alpha.squaredNorm() / l2, pc, ac);
    const QuantumState c = weyl_displace(s.u_hat / lambda, s.initial.alpha / lambda, phi, propagator_config(cfg));
    const QuantumState xt = evolve_full(build_H(basis, grid, lambda), c, q.time, propagator_config(cfg));
    const FieldAverage avg = field_average(xt, lambda);
    return Row{(avg.psi - u_t).norm(), (avg.a - alpha_t).norm(), tail, basis->size()};
  });
  Csv csv({"lambda", "dimension", "psi_error", "a_error", "coherent_tail"});
  std::vector<double> errors;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    errors.push_back(rows[k].psi_error);
    csv.row({q.lambdas[k], static_cast<double>(rows[k].dim), rows[k].psi_error, rows[k].a_error, rows[k].tail});
    out.check("coherent_tail_lambda=" + format_double(q.lambdas[k]), rows[k].tail, -kInf, q.tail_tolerance);
  }
  out.files[vacuum ? "rates-vacuum.csv" : "rates-coherent.csv"] = csv.str();
  out.result.lambdas = q.lambdas;
  out.result.errors = errors;
  fit_rate(out, q.lambdas, errors);
  if (vacuum)
    out.check("psi_error_slope", out.result.fit.slope, 1.5, 2.5);
  else
    out.check("psi_error_slope", out.result.fit.slope, 0.7, 1.5);
  return out;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> registry{
      {"classical-charge", "classical", "charge conservation of the Strang integrator", classical_charge},
      {"classical-order", "classical", "second-order convergence under dt halving", classical_order},
      {"classical-picard", "classical", "Picard fixed point versus Strang", classical_picard},
      {"classical-continuity", "classical", "continuous dependence on alpha0", classical_continuity},
      {"classical-reversal", "classical", "time-reversal round trip", classical_reversal},
      {"ccr", "quantum", "canonical commutation relations and adjointness", ccr},
      {"sparse-dense", "quantum", "sparse builders versus dense ladder products", sparse_dense},
      {"structural-zeros", "quantum", "[H,N1]=0 and vanishing averages for q!=r", structural_zeros},
      {"one-particle", "fluct", "one-particle preservation by the fluctuation dynamics", one_particle},
      {"hdelta-bound", "fluct", "weighted number-norm growth bound", hdelta},
      {"dyson-cross", "fluct", "Dyson series versus adaptive ODE", dyson_cross},
      {"w-cross", "fluct", "direct W versus its generator equation", w_cross},
      {"strong-limit", "fluct", "W tilde approaching the fluctuation dynamics", strong_limit},
      {"rates-coherent", "rates", "field-average rate for a coherent family",
       [](const RunConfig& c, std::size_t j) { return rates(c, j, false); }},
      {"rates-vacuum", "rates", "field-average rate for the displaced vacuum",
       [](const RunConfig& c, std::size_t j) { return rates(c, j, true); }},
      {"theta-identity", "theta", "product state as a theta integral of coherent states", theta_identity},
      {"theta-residue", "theta", "theta-averaged prediction versus the quantum average", theta_residue},
  };
  return registry;
}

}  // namespace nelson
