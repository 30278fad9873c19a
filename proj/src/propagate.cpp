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

#include "nelson/propagate.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "nelson/io.hpp"
#include "nelson/states.hpp"

namespace nelson {

namespace {
Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
using Triplet = Eigen::Triplet<cplx, Eigen::Index>;
}  // namespace

CVector chebyshev_action(const SparseMatrix& h, std::pair<double, double> bounds, const CVector& x, double t,
                         double tolerance, std::size_t max_terms, std::size_t* terms_used) {
  require(tolerance > 0.0, "propagator tolerance must be positive");
  require(h.rows() == x.size(), "vector length does not match operator");
  if (terms_used) *terms_used = 0;
  if (t == 0.0 || x.size() == 0) return x;
  const double lo = bounds.first, hi = bounds.second;
  const double center = 0.5 * (lo + hi);
  const double radius = std::max(0.5 * (hi - lo) * (1.0 + 1e-12) + 1e-300, 1e-12);
  // Split long times so every chunk has a moderate Bessel argument.
  const double z_total = radius * std::abs(t);
  const std::size_t chunks = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(z_total / 200.0)));
  const double dt = t / static_cast<double>(chunks);
  const double z = radius * std::abs(dt);
  const cplx rot = dt > 0 ? cplx(0.0, -1.0) : cplx(0.0, 1.0);
  CVector y = x;
  std::size_t used = 0;
  CVector t0(x.size()), t1(x.size()), t2(x.size()), acc(x.size());
  for (std::size_t c = 0; c < chunks; ++c) {
    t0 = y;
    acc = std::cyl_bessel_j(0.0, z) * t0;
    t1 = (h * t0 - center * t0) / radius;
    cplx coef = 2.0 * rot;
    acc += coef * std::cyl_bessel_j(1.0, z) * t1;
    std::size_t k = 1;
    while (true) {
      ++k;
      if (++used > max_terms) throw NumericalError("Chebyshev propagator exceeded its term budget");
      t2 = 2.0 * (h * t1 - center * t1) / radius - t0;
      coef *= rot;
      const double jk = std::cyl_bessel_j(static_cast<double>(k), z);
      acc += coef * jk * t2;
      t0.swap(t1);
      t1.swap(t2);
      if (static_cast<double>(k) > z) {
        const double jn = std::cyl_bessel_j(static_cast<double>(k + 1), z);
        if (2.0 * (std::abs(jk) + std::abs(jn)) < 1e-2 * tolerance) break;
      }
    }
    y = std::exp(-kI * center * dt) * acc;
    if (!y.allFinite()) throw NumericalError("Chebyshev propagator produced non-finite values");
  }
  if (terms_used) *terms_used = used;
  return y;
}

CVector dense_action(const Eigen::MatrixXcd& h, const CVector& x, double t) {
  require(h.rows() <= 2000, "dense propagator limited to dimension 2000");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigendecomposition failed");
  CVector c = es.eigenvectors().adjoint() * x;
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(-kI * es.eigenvalues()[i] * t);
  return es.eigenvectors() * c;
}

QuantumState evolve_full(const OperatorRep& h, const QuantumState& s, double t, const PropagatorConfig& cfg) {
  require(h.basis == s.basis, "operator and state live on different bases");
  require(h.hermitian, "evolve_full needs a hermitian generator");
  if (cfg.method == PropagatorConfig::Method::dense_eig) return {s.basis, dense_action(h.dense(), s.amplitudes, t)};
  return {s.basis, chebyshev_action(h.matrix, h.spectral_bounds(), s.amplitudes, t, cfg.tolerance, cfg.max_terms)};
}

QuantumState evolve_diagonal(const RVector& e, const QuantumState& s, double t) {
  require(e.size() == s.amplitudes.size(), "energy table does not match state");
  QuantumState out = s;
  for (Eigen::Index i = 0; i < e.size(); ++i) out.amplitudes[i] *= std::exp(-kI * e[i] * t);
  return out;
}

QuantumState evolve_free(const ModeGrid& grid, const QuantumState& s, double t) {
  return evolve_diagonal(free_energies(*s.basis, grid), s, t);
}

OperatorRep weyl_generator(const BasisPtr& basis, const CVector& f, const CVector& g) {
  const FockBasis& B = *basis;
  require(static_cast<std::size_t>(f.size()) == B.psi().modes(), "psi displacement has wrong length");
  require(static_cast<std::size_t>(g.size()) == B.a().modes(), "a displacement has wrong length");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const std::size_t lp = B.psi_local(i), la = B.a_local(i);
    for (std::size_t m = 0; m < B.psi().modes(); ++m) {
      if (f[idx(m)] == 0.0) continue;
      const std::int64_t r = B.psi().raise(lp, m);
      if (r < 0) continue;
      const double s = std::sqrt(static_cast<double>(B.psi().occupation(lp, m) + 1));
      t.emplace_back(idx(B.index(static_cast<std::size_t>(r), la)), idx(i), kI * f[idx(m)] * s);
    }
    for (std::size_t m = 0; m < B.a().modes(); ++m) {
      if (g[idx(m)] == 0.0) continue;
      const std::int64_t r = B.a().raise(la, m);
      if (r < 0) continue;
      const double s = std::sqrt(static_cast<double>(B.a().occupation(la, m) + 1));
      t.emplace_back(idx(B.index(lp, static_cast<std::size_t>(r))), idx(i), kI * g[idx(m)] * s);
    }
  }
  SparseMatrix c(idx(B.size()), idx(B.size()));
  c.setFromTriplets(t.begin(), t.end());
  SparseMatrix k = c + SparseMatrix(c.adjoint());
  k.makeCompressed();
  return {basis, std::move(k), true};
}

QuantumState weyl_displace(const CVector& f, const CVector& g, const QuantumState& s, const PropagatorConfig& cfg) {
  if (f.isZero(0.0) && g.isZero(0.0)) return s;
  return evolve_full(weyl_generator(s.basis, f, g), s, 1.0, cfg);
}

namespace {

struct Collocation {
  std::vector<double> xi;               // nodes on [-1, 1]
  std::vector<double> w;                // weights on [-1, 1]
  Eigen::MatrixXd integral;             // int_{-1}^{xi_i} l_j
};

Collocation make_collocation(std::size_t m) {
  Collocation c;
  const Quadrature q = gauss_legendre(m);
  c.xi = q.nodes;
  c.w = q.weights;
  c.integral.resize(idx(m), idx(m));
  auto lagrange = [&](std::size_t j, double x) {
    double v = 1.0;
    for (std::size_t k = 0; k < m; ++k)
      if (k != j) v *= (x - c.xi[k]) / (c.xi[j] - c.xi[k]);
    return v;
  };
  for (std::size_t i = 0; i < m; ++i) {
    const double a = -1.0, b = c.xi[i];
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double x = a + (b - a) * 0.5 * (q.nodes[k] + 1.0);
        s += 0.5 * (b - a) * q.weights[k] * lagrange(j, x);
      }
      c.integral(idx(i), idx(j)) = s;
    }
  }
  return c;
}

// One substep of the truncated Dyson series; returns the highest-order term norm.
double dyson_substep(const TimeGenerator& g, const Collocation& col, std::size_t order, double a, double b,
                     CVector& x) {
  const std::size_t m = col.xi.size();
  const double half = 0.5 * (b - a);
  std::vector<double> tau(m);
  for (std::size_t i = 0; i < m; ++i) tau[i] = a + half * (col.xi[i] + 1.0);
  std::vector<CVector> phi(m, x), z(m);
  CVector result = x;
  double last = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    for (std::size_t j = 0; j < m; ++j) g(tau[j], phi[j], z[j]);
    CVector end = CVector::Zero(x.size());
    for (std::size_t j = 0; j < m; ++j) end.noalias() += (col.w[j] * half) * z[j];
    end *= -kI;
    for (std::size_t i = 0; i < m; ++i) {
      phi[i].setZero();
      for (std::size_t j = 0; j < m; ++j) phi[i].noalias() += (col.integral(idx(i), idx(j)) * half) * z[j];
      phi[i] *= -kI;
    }
    result += end;
    last = end.norm();
  }
  x = std::move(result);
  return last;
}

void dyson_interval(const TimeGenerator& g, const Collocation& col, const DysonConfig& cfg, double a, double b,
                    double local_scale, std::size_t depth, CVector& x, std::size_t& steps, double& last) {
  CVector trial = x;
  const double term = dyson_substep(g, col, cfg.order, a, b, trial);
  const double allowed = cfg.tolerance * std::abs(b - a) * local_scale;
  if (term <= allowed || depth >= cfg.max_refinements) {
    if (term > allowed)
      throw NumericalError("Dyson series did not meet tolerance after " + std::to_string(depth) +
                           " refinements (last term " + format_double(term) + ")");
    x = std::move(trial);
    ++steps;
    last = std::max(last, term);
    return;
  }
  const double mid = 0.5 * (a + b);
  dyson_interval(g, col, cfg, a, mid, local_scale, depth + 1, x, steps, last);
  dyson_interval(g, col, cfg, mid, b, local_scale, depth + 1, x, steps, last);
}

}  // namespace

CVector dyson_series(const TimeGenerator& g, const CVector& x, double s, double t, const DysonConfig& cfg,
                     std::size_t* substeps, double* last_term) {
  require(cfg.tolerance > 0.0 && cfg.order >= 1 && cfg.nodes >= 2 && cfg.substeps >= 1, "invalid Dyson config");
  CVector y = x;
  std::size_t steps = 0;
  double last = 0.0;
  if (t != s) {
    const Collocation col = make_collocation(cfg.nodes);
    const double span = std::abs(t - s);
    const double h = (t - s) / static_cast<double>(cfg.substeps);
    for (std::size_t k = 0; k < cfg.substeps; ++k) {
      const double a = s + h * static_cast<double>(k);
      const double b = (k + 1 == cfg.substeps) ? t : s + h * static_cast<double>(k + 1);
      dyson_interval(g, col, cfg, a, b, 1.0 / span, 0, y, steps, last);
    }
  }
  if (substeps) *substeps = steps;
  if (last_term) *last_term = last;
  return y;
}

DysonResult time_ordered(const TimeGenerator& g, const CVector& x, double s, double t, const DysonConfig& cfg) {
  DysonResult r;
  r.series = dyson_series(g, x, s, t, cfg, &r.substeps, &r.last_term);
  r.ode = x;
  if (t != s) {
    OdeOptions o;
    o.rtol = 1e-2 * cfg.tolerance;
    o.atol = 1e-2 * cfg.tolerance / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, x.size())));
    OdeRhs f = [&g](double tt, const CVector& y, CVector& dy) {
      g(tt, y, dy);
      dy *= -kI;
    };
    r.ode_stats = dopri5(f, s, t, r.ode, o);
  }
  r.discrepancy = (r.series - r.ode).norm();
  return r;
}

FluctuationPropagator::FluctuationPropagator(const FluctuationGenerator& generator, const ModeGrid& grid,
                                             const Trajectory& trajectory, double nu)
    : gen_(generator), grid_(grid), traj_(trajectory) {
  if (nu > 0.0) sigma_ = sigma_weights(*generator.basis(), nu);
}

TimeGenerator FluctuationPropagator::generator() const {
  return [this](double t, const CVector& x, CVector& y) {
    const FluctuationCoefficients c = fluctuation_coefficients(grid_, traj_.at(t));
    if (sigma_.size() == 0) {
      gen_.apply_interaction(t, c, x, y);
      return;
    }
    const CVector sx = sigma_.cast<cplx>().cwiseProduct(x);
    gen_.apply_interaction(t, c, sx, y);
    y = sigma_.cast<cplx>().cwiseProduct(y);
  };
}

DysonResult FluctuationPropagator::apply(const QuantumState& state, double t, double s,
                                         const DysonConfig& cfg) const {
  require(state.basis == gen_.basis(), "state does not live on the fluctuation basis");
  require(traj_.covers(s) && traj_.covers(t), "trajectory does not cover the propagation interval");
  return time_ordered(generator(), state.amplitudes, s, t, cfg);
}

PhaseResult phase_Lambda(const ModeGrid& grid, const Trajectory& traj, double t, double s, double lambda,
                         double tolerance) {
  require(lambda > 0.0, "lambda must be positive");
  require(traj.covers(s) && traj.covers(t), "trajectory does not cover the phase interval");
  PhaseResult r;
  if (t == s) return r;
  auto integrand = [&](double tau) {
    const ClassicalState st = traj.at(tau);
    const RVector phi = potential(grid, st.alpha);
    return phi.dot(st.u.cwiseAbs2());
  };
  auto simpson = [&](std::size_t n) {
    const double h = (t - s) / static_cast<double>(n);
    double acc = integrand(s) + integrand(t);
    for (std::size_t k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * integrand(s + h * static_cast<double>(k));
    return acc * h / 3.0;
  };
  const double scale = -0.5 / (lambda * lambda);
  std::size_t n = 16;
  double prev = simpson(n / 2);
  while (true) {
    const double cur = simpson(n);
    const double err = std::abs(cur - prev) / 15.0;
    r.value = scale * cur;
    r.error = std::abs(scale) * err;
    r.intervals = n;
    if (r.error <= tolerance) break;
    if (n >= (std::size_t{1} << 20))
      throw NumericalError("phase quadrature did not converge; the trajectory is too coarse");
    prev = cur;
    n *= 2;
  }
  return r;
}

std::pair<CVector, CVector> coherent_shift(const ModeGrid& grid, const ClassicalState& st, double lambda) {
  require(lambda > 0.0, "lambda must be positive");
  return {grid.fourier(st.u) / lambda, st.alpha / lambda};
}

WAction build_W_action(const ModeGrid& grid, const OperatorRep& h, const Trajectory& traj, double lambda, double t,
                       double s, const QuantumState& state, bool interaction, const PropagatorConfig& cfg,
                       double tail_threshold) {
  require(h.basis == state.basis, "state must live on the basis of H");
  require(traj.covers(s) && traj.covers(t), "trajectory does not cover [s, t]");
  const FockBasis& B = *h.basis;
  WAction w;
  const auto [fs, gs] = coherent_shift(grid, traj.at(s), lambda);
  const auto [ft, gt] = coherent_shift(grid, traj.at(t), lambda);
  const double tail = std::max(coherent_tail(fs.squaredNorm(), gs.squaredNorm(), B.psi().cap(), B.a().cap()),
                               coherent_tail(ft.squaredNorm(), gt.squaredNorm(), B.psi().cap(), B.a().cap()));
  w.coherent_tail = tail;
  if (tail > tail_threshold) {
    const double m1 = std::max(fs.squaredNorm(), ft.squaredNorm()), m2 = std::max(gs.squaredNorm(), gt.squaredNorm());
    throw ConfigError("coherent tail " + format_double(tail) + " exceeds " + format_double(tail_threshold) +
                      "; required caps psi >= " + std::to_string(required_cap(m1, 0.5 * tail_threshold)) +
                      ", a >= " + std::to_string(required_cap(m2, 0.5 * tail_threshold)));
  }
  const RVector e = free_energies(B, grid);
  QuantumState x = state;
  if (interaction) x = evolve_diagonal(e, x, s);
  x = weyl_displace(fs, gs, x, cfg);
  x = evolve_full(h, x, t - s, cfg);
  x = weyl_displace(-ft, -gt, x, cfg);
  w.phase = phase_Lambda(grid, traj, t, s, lambda).value;
  x.amplitudes *= std::exp(kI * w.phase);
  if (interaction) x = evolve_diagonal(e, x, -t);
  w.norm_defect = std::abs(x.norm() - state.norm());
  w.state = std::move(x);
  return w;
}

CVector W_tilde_from_generator(const FluctuationGenerator& generator, const OperatorRep& hi, const ModeGrid& grid,
                               const Trajectory& traj, double t, double s, const CVector& x, double tolerance) {
  require(hi.basis == generator.basis(), "H_I and the fluctuation generator must share a basis");
  require(traj.covers(s) && traj.covers(t), "trajectory does not cover [s, t]");
  const RVector& e = generator.free_energies();
  CVector y = x;
  if (t == s) return y;
  CVector tmp(x.size());
  OdeRhs f = [&](double tau, const CVector& v, CVector& dv) {
    const FluctuationCoefficients c = fluctuation_coefficients(grid, traj.at(tau));
    generator.apply_interaction(tau, c, v, dv);
    CVector ph(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) ph[i] = std::exp(-kI * e[i] * tau);
    tmp = hi.matrix * ph.cwiseProduct(v);
    dv.noalias() += ph.conjugate().cwiseProduct(tmp);
    dv *= -kI;
  };
  OdeOptions o;
  o.rtol = 1e-2 * tolerance;
  o.atol = 1e-2 * tolerance / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, x.size())));
  dopri5(f, s, t, y, o);
  return y;
}

double hdelta_bound(double delta, double kernel_integral) {
  const double a = std::abs(delta);
  const double c2 = std::max(4.0, std::pow(3.0, 0.5 * a) + 1.0);
  return std::exp(0.5 * a * (std::log(3.0) + std::sqrt(2.0) * c2 * kernel_integral));
}

}  // namespace nelson
