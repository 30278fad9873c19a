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

#include "nelson/classical.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <string>

#include "nelson/integrators.hpp"
#include "nelson/io.hpp"

namespace nelson {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_state(const ModeGrid& grid, const ClassicalState& s) {
  require(static_cast<std::size_t>(s.u.size()) == grid.size(), "u has wrong length for the grid");
  require(static_cast<std::size_t>(s.alpha.size()) == grid.cutoff_count(),
          "alpha must live on the cutoff modes of the grid");
}

bool all_finite(const ClassicalState& s) { return s.u.allFinite() && s.alpha.allFinite(); }

RVector omega_slots(const ModeGrid& grid) {
  RVector w(idx(grid.cutoff_count()));
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j) w[idx(j)] = grid.dispersion(grid.cutoff_modes()[j]);
  return w;
}

CVector kinetic_phase(const ModeGrid& grid, const CVector& u, double t) {
  CVector uh = grid.fourier(u);
  for (std::size_t m = 0; m < grid.size(); ++m) uh[idx(m)] *= std::exp(-kI * grid.kinetic_energy(m) * t);
  return grid.inverse_fourier(uh);
}

CVector rotate_alpha(const ModeGrid& grid, const CVector& alpha, double t) {
  CVector out = alpha;
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j)
    out[idx(j)] *= std::exp(-kI * grid.dispersion(grid.cutoff_modes()[j]) * t);
  return out;
}

ClassicalState hermite(const ClassicalState& a, const ClassicalRate& ra, const ClassicalState& b,
                       const ClassicalRate& rb, double t) {
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  ClassicalState out;
  out.t = t;
  out.u = h00 * a.u + h10 * h * ra.du + h01 * b.u + h11 * h * rb.du;
  out.alpha = h00 * a.alpha + h10 * h * ra.dalpha + h01 * b.alpha + h11 * h * rb.dalpha;
  return out;
}

ClassicalRate hermite_rate(const ClassicalState& a, const ClassicalRate& ra, const ClassicalState& b,
                           const ClassicalRate& rb, double t) {
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
  const double d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
  ClassicalRate out;
  out.du = (d00 * a.u + d01 * b.u) / h + d10 * ra.du + d11 * rb.du;
  out.dalpha = (d00 * a.alpha + d01 * b.alpha) / h + d10 * ra.dalpha + d11 * rb.dalpha;
  return out;
}

double relative_drift(double q0, const CVector& u) {
  const double n0 = std::sqrt(q0);
  if (n0 == 0.0) return u.norm();
  return std::abs(u.norm() - n0) / n0;
}

}  // namespace

bool Trajectory::covers(double t) const {
  if (states.empty()) return false;
  const double slack = 1e-12 * std::max(1.0, std::abs(end()));
  return t >= start() - slack && t <= end() + slack;
}

namespace {
std::size_t locate(const Trajectory& tr, double t) {
  require(tr.covers(t), "time " + format_double(t) + " outside stored trajectory [" + format_double(tr.start()) +
                            ", " + format_double(tr.end()) + "]");
  auto it = std::upper_bound(tr.states.begin(), tr.states.end(), t,
                             [](double v, const ClassicalState& s) { return v < s.t; });
  std::size_t i = static_cast<std::size_t>(it - tr.states.begin());
  if (i == 0) i = 1;
  if (i >= tr.states.size()) i = tr.states.size() - 1;
  return i - 1;
}
}  // namespace

ClassicalState Trajectory::at(double t) const {
  if (states.size() == 1) {
    require(covers(t), "time outside stored trajectory");
    ClassicalState s = states.front();
    s.t = t;
    return s;
  }
  const std::size_t i = locate(*this, t);
  return hermite(states[i], rates[i], states[i + 1], rates[i + 1], t);
}

ClassicalRate Trajectory::rate_at(double t) const {
  if (states.size() == 1) {
    require(covers(t), "time outside stored trajectory");
    return rates.front();
  }
  const std::size_t i = locate(*this, t);
  return hermite_rate(states[i], rates[i], states[i + 1], rates[i + 1], t);
}

RVector build_A(const ModeGrid& grid, const CVector& alpha) {
  require(static_cast<std::size_t>(alpha.size()) == grid.cutoff_count(),
          "alpha must be supported on the cutoff modes");
  CVector ah = CVector::Zero(idx(grid.size()));
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j) {
    const std::size_t m = grid.cutoff_modes()[j];
    ah[idx(m)] = (alpha[idx(j)] + std::conj(alpha[idx(grid.negated_slot(j))])) /
                 std::sqrt(2.0 * grid.dispersion(m));
  }
  const CVector a = grid.inverse_fourier(ah);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (a.imag().cwiseAbs().maxCoeff() > 1e-10 * scale) throw NumericalError("A is not real");
  return a.real();
}

RVector potential(const ModeGrid& grid, const CVector& alpha) {
  return grid.coupling_constant() * std::sqrt(static_cast<double>(grid.size())) * build_A(grid, alpha);
}

CVector source(const ModeGrid& grid, const CVector& u) {
  require(static_cast<std::size_t>(u.size()) == grid.size(), "u has wrong length for the grid");
  const CVector density = u.cwiseAbs2().cast<cplx>();
  const CVector rho = grid.gather_cutoff(grid.fourier(density));
  return std::sqrt(static_cast<double>(grid.size())) * grid.form_factors().cast<cplx>().cwiseProduct(rho);
}

double charge(const CVector& u) { return u.squaredNorm(); }

ClassicalRate rhs(const ModeGrid& grid, const ClassicalState& s) {
  check_state(grid, s);
  CVector uh = grid.fourier(s.u);
  for (std::size_t m = 0; m < grid.size(); ++m) uh[idx(m)] *= grid.kinetic_energy(m);
  ClassicalRate r;
  const RVector phi = potential(grid, s.alpha);
  r.du = -kI * (grid.inverse_fourier(uh) + phi.cast<cplx>().cwiseProduct(s.u));
  r.dalpha = -kI * (omega_slots(grid).cast<cplx>().cwiseProduct(s.alpha) + source(grid, s.u));
  return r;
}

ClassicalState free_evolve(const ModeGrid& grid, const ClassicalState& s, double t) {
  check_state(grid, s);
  ClassicalState out;
  out.t = s.t + t;
  out.u = kinetic_phase(grid, s.u, t);
  out.alpha = rotate_alpha(grid, s.alpha, t);
  return out;
}

ClassicalState step_strang(const ModeGrid& grid, const ClassicalState& s, double dt) {
  require(dt > 0.0 && std::isfinite(dt), "Strang step needs dt > 0");
  ClassicalState h = free_evolve(grid, s, 0.5 * dt);
  // |u| is constant under the potential sub-flow, so the source is constant and
  // alpha moves linearly; the phase of u integrates the potential at the mean alpha.
  const CVector a_new = h.alpha - kI * dt * source(grid, h.u);
  const RVector phi = potential(grid, 0.5 * (h.alpha + a_new));
  for (Eigen::Index x = 0; x < h.u.size(); ++x) h.u[x] *= std::exp(-kI * dt * phi[x]);
  h.alpha = a_new;
  ClassicalState out = free_evolve(grid, h, 0.5 * dt);
  out.t = s.t + dt;
  if (!all_finite(out))
    throw NumericalError("Strang step produced non-finite values at t = " + format_double(out.t));
  return out;
}

Trajectory solve(const ModeGrid& grid, const ClassicalState& initial, double T, const SolveOptions& o) {
  check_state(grid, initial);
  require(T >= 0.0 && std::isfinite(T), "horizon T must be non-negative");
  require(o.store_every >= 1, "store_every must be at least 1");
  require(all_finite(initial), "initial data must be finite");
  Trajectory tr;
  const double q0 = charge(initial.u);
  auto store = [&](const ClassicalState& s) {
    tr.max_charge_drift = std::max(tr.max_charge_drift, relative_drift(q0, s.u));
    tr.states.push_back(s);
    tr.rates.push_back(rhs(grid, s));
  };
  auto check_drift = [&](const CVector& u, double t) {
    const double d = relative_drift(q0, u);
    if (d > o.max_charge_drift)
      throw NumericalError("charge drift " + format_double(d) + " exceeds threshold at t = " + format_double(t));
  };
  if (o.method == SolveOptions::Method::strang) {
    require(o.dt > 0.0, "dt must be positive");
    const double steps_real = T / o.dt;
    const auto steps = static_cast<std::size_t>(std::llround(steps_real));
    require(std::abs(steps_real - static_cast<double>(steps)) <= 1e-9 * std::max(1.0, steps_real),
            "dt must divide T");
    ClassicalState s = initial;
    store(s);
    for (std::size_t n = 1; n <= steps; ++n) {
      s = step_strang(grid, s, o.dt);
      s.t = initial.t + static_cast<double>(n) * o.dt;
      check_drift(s.u, s.t);
      if (n % o.store_every == 0 || n == steps) store(s);
    }
    return tr;
  }
  const std::size_t nu = grid.size(), na = grid.cutoff_count();
  CVector y(idx(nu + na));
  y << initial.u, initial.alpha;
  auto unpack = [&](double t, const CVector& v) {
    ClassicalState s;
    s.t = t;
    s.u = v.head(idx(nu));
    s.alpha = v.tail(idx(na));
    return s;
  };
  OdeRhs f = [&](double t, const CVector& v, CVector& dv) {
    const ClassicalRate r = rhs(grid, unpack(t, v));
    dv << r.du, r.dalpha;
  };
  std::size_t count = 0;
  const double t1 = initial.t + T;
  OdeObserver obs = [&](double t, const CVector& v, const CVector&) {
    ClassicalState s = unpack(t, v);
    check_drift(s.u, t);
    if (count++ % o.store_every == 0 || t == t1) store(s);
  };
  OdeOptions oo;
  oo.rtol = o.rtol;
  oo.atol = o.atol;
  dopri5(f, initial.t, t1, y, oo, obs);
  if (tr.states.back().t != t1) store(unpack(t1, y));
  return tr;
}

PicardResult picard_solve(const ModeGrid& grid, const ClassicalState& initial, double T, const PicardOptions& o) {
  check_state(grid, initial);
  require(T >= 0.0 && std::isfinite(T), "horizon T must be non-negative");
  require(o.tol > 0.0 && o.max_iter >= 1 && o.intervals >= 1, "invalid Picard options");
  const std::size_t K = o.intervals;
  const double h = T / static_cast<double>(K);
  const std::size_t nu = grid.size(), na = grid.cutoff_count();
  std::vector<double> times(K + 1);
  for (std::size_t n = 0; n <= K; ++n) times[n] = static_cast<double>(n) * h;

  const CVector u0h = grid.fourier(initial.u);
  std::vector<CVector> uh(K + 1, u0h), at(K + 1, initial.alpha);  // interaction-picture iterates
  std::vector<CVector> gu(K + 1), ga(K + 1);

  auto lab_u = [&](std::size_t n, const CVector& vh) {
    CVector w = vh;
    for (std::size_t m = 0; m < nu; ++m) w[idx(m)] *= std::exp(-kI * grid.kinetic_energy(m) * times[n]);
    return grid.inverse_fourier(w);
  };

  PicardResult res;
  double prev = 0.0;
  for (std::size_t it = 1; it <= o.max_iter; ++it) {
    for (std::size_t n = 0; n <= K; ++n) {
      const CVector u = lab_u(n, uh[n]);
      const CVector a = rotate_alpha(grid, at[n], times[n]);
      const RVector phi = potential(grid, a);
      CVector g = grid.fourier(phi.cast<cplx>().cwiseProduct(u));
      for (std::size_t m = 0; m < nu; ++m) g[idx(m)] *= std::exp(kI * grid.kinetic_energy(m) * times[n]);
      gu[n] = std::move(g);
      ga[n] = rotate_alpha(grid, source(grid, u), -times[n]);
    }
    double inc = 0.0;
    CVector iu = CVector::Zero(idx(nu)), ia = CVector::Zero(idx(na));
    for (std::size_t n = 0; n <= K; ++n) {
      if (n > 0) {
        iu += 0.5 * h * (gu[n - 1] + gu[n]);
        ia += 0.5 * h * (ga[n - 1] + ga[n]);
      }
      CVector nu_h = u0h - kI * iu;
      CVector na_t = initial.alpha - kI * ia;
      inc = std::max(inc, (nu_h - uh[n]).norm() + (na_t - at[n]).norm());
      uh[n] = std::move(nu_h);
      at[n] = std::move(na_t);
    }
    res.increments.push_back(inc);
    res.iterations = it;
    if (!std::isfinite(inc)) throw NumericalError("Picard iteration produced non-finite values");
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, u0h.norm() + initial.alpha.norm());
    if (it >= 2 && prev > floor) {
      const double ratio = inc / prev;
      res.contraction = std::max(res.contraction, ratio);
      if (ratio >= 1.0 && inc > o.tol)
        throw NumericalError("Picard map is not contracting on [0, " + format_double(T) + "] (ratio " +
                             format_double(ratio) + "); use a smaller T");
    }
    prev = inc;
    if (inc <= o.tol) break;
    if (it == o.max_iter)
      throw NumericalError("Picard iteration did not reach tolerance in " + std::to_string(o.max_iter) +
                           " iterations");
  }
  const double q0 = charge(initial.u);
  for (std::size_t n = 0; n <= K; ++n) {
    ClassicalState s;
    s.t = initial.t + times[n];
    s.u = lab_u(n, uh[n]);
    s.alpha = rotate_alpha(grid, at[n], times[n]);
    res.trajectory.max_charge_drift = std::max(res.trajectory.max_charge_drift, relative_drift(q0, s.u));
    res.trajectory.rates.push_back(rhs(grid, s));
    res.trajectory.states.push_back(std::move(s));
  }
  return res;
}

ClassicalState time_reverse(const ModeGrid& grid, const ClassicalState& s) {
  check_state(grid, s);
  ClassicalState out;
  out.t = s.t;
  out.u = s.u.conjugate();
  out.alpha.resize(s.alpha.size());
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j)
    out.alpha[idx(j)] = std::conj(s.alpha[idx(grid.negated_slot(j))]);
  return out;
}

ThetaFamily solve_theta_family(const ModeGrid& grid, const ClassicalState& base, std::size_t n_theta, double T,
                               const SolveOptions& options, std::size_t jobs) {
  require(n_theta >= 4 && n_theta % 2 == 0, "theta sample count must be even and at least 4");
  ThetaFamily fam;
  fam.base = base;
  fam.thetas.resize(n_theta);
  fam.members.resize(n_theta);
  for (std::size_t j = 0; j < n_theta; ++j) fam.thetas[j] = 2.0 * kPi * static_cast<double>(j) / n_theta;
  auto member = [&](std::size_t j) {
    ClassicalState s = base;
    s.alpha *= std::exp(-kI * fam.thetas[j]);
    fam.members[j] = solve(grid, s, T, options);
  };
  jobs = std::max<std::size_t>(1, jobs);
  for (std::size_t start = 0; start < n_theta; start += jobs) {
    std::vector<std::future<void>> pending;
    const std::size_t stop = std::min(n_theta, start + jobs);
    for (std::size_t j = start; j < stop; ++j) pending.push_back(std::async(std::launch::async, member, j));
    for (auto& p : pending) p.get();
  }
  return fam;
}

void write_trajectory_csv(std::ostream& out, const ModeGrid& grid, const Trajectory& tr) {
  std::vector<std::string> head{"t"};
  for (std::size_t x = 0; x < grid.size(); ++x) {
    head.push_back("u_re_" + std::to_string(x));
    head.push_back("u_im_" + std::to_string(x));
  }
  for (std::size_t j = 0; j < grid.cutoff_count(); ++j) {
    head.push_back("alpha_re_" + std::to_string(j));
    head.push_back("alpha_im_" + std::to_string(j));
  }
  write_csv_row(out, head);
  for (const auto& s : tr.states) {
    std::vector<std::string> row{format_double(s.t)};
    for (Eigen::Index x = 0; x < s.u.size(); ++x) {
      row.push_back(format_double(s.u[x].real()));
      row.push_back(format_double(s.u[x].imag()));
    }
    for (Eigen::Index j = 0; j < s.alpha.size(); ++j) {
      row.push_back(format_double(s.alpha[j].real()));
      row.push_back(format_double(s.alpha[j].imag()));
    }
    write_csv_row(out, row);
  }
}

}  // namespace nelson
