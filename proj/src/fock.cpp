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

#include "nelson/fock.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace nelson {

namespace {
Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
constexpr std::size_t kMaxBasis = 60'000'000;
}  // namespace

SpeciesBasis::SpeciesBasis(std::size_t modes, std::size_t cap) : modes_(modes), cap_(cap) {
  require(modes >= 1, "a species needs at least one mode");
  require(cap <= 255, "occupation cap must not exceed 255");
  const std::size_t w = cap + modes + 1;
  binom_.assign(w * w, 0);
  for (std::size_t n = 0; n < w; ++n) {
    binom_[n * w] = 1;
    for (std::size_t k = 1; k <= std::min(n, modes); ++k) {
      const std::size_t v = binom_[(n - 1) * w + k - 1] + binom_[(n - 1) * w + k];
      binom_[n * w + k] = std::min(v, kMaxBasis * 4);
    }
  }
  offsets_.resize(cap + 2);
  offsets_[0] = 0;
  for (std::size_t n = 0; n <= cap; ++n) offsets_[n + 1] = offsets_[n] + sector_size(n);
  size_ = offsets_[cap + 1];
  if (size_ > kMaxBasis) throw ConfigError("species basis dimension " + std::to_string(size_) + " too large");

  occ_.assign(size_ * modes_, 0);
  totals_.resize(size_);
  std::vector<int> cur(modes_, 0);
  std::size_t pos = 0;
  for (std::size_t n = 0; n <= cap; ++n) {
    // Lexicographically descending weak compositions of n.
    std::fill(cur.begin(), cur.end(), 0);
    cur[0] = static_cast<int>(n);
    while (true) {
      for (std::size_t m = 0; m < modes_; ++m) occ_[pos * modes_ + m] = static_cast<std::uint8_t>(cur[m]);
      totals_[pos] = static_cast<std::uint32_t>(n);
      ++pos;
      // Next composition: find the rightmost non-last position with a positive entry.
      std::ptrdiff_t i = static_cast<std::ptrdiff_t>(modes_) - 2;
      while (i >= 0 && cur[static_cast<std::size_t>(i)] == 0) --i;
      if (i < 0) break;
      const std::size_t ui = static_cast<std::size_t>(i);
      const int tail = cur[modes_ - 1];
      cur[modes_ - 1] = 0;
      cur[ui] -= 1;
      cur[ui + 1] = tail + 1;
    }
  }
  raise_.assign(size_ * modes_, -1);
  lower_.assign(size_ * modes_, -1);
  std::vector<int> o(modes_);
  for (std::size_t l = 0; l < size_; ++l) {
    for (std::size_t m = 0; m < modes_; ++m) o[m] = occ_[l * modes_ + m];
    for (std::size_t m = 0; m < modes_; ++m) {
      if (totals_[l] < cap_) {
        ++o[m];
        raise_[l * modes_ + m] = static_cast<std::int64_t>(rank(o));
        --o[m];
      }
      if (o[m] > 0) {
        --o[m];
        lower_[l * modes_ + m] = static_cast<std::int64_t>(rank(o));
        ++o[m];
      }
    }
  }
}

std::size_t SpeciesBasis::compositions(std::size_t total, std::size_t parts) const {
  if (parts == 0) return total == 0 ? 1 : 0;
  const std::size_t w = cap_ + modes_ + 1;
  return binom_[(total + parts - 1) * w + (parts - 1)];
}

std::size_t SpeciesBasis::sector_size(std::size_t n) const {
  require(n <= cap_, "sector total above cap");
  return compositions(n, modes_);
}

std::size_t SpeciesBasis::rank(std::span<const int> occupation) const {
  require(occupation.size() == modes_, "occupation vector has wrong length");
  std::size_t n = 0;
  for (int v : occupation) {
    require(v >= 0, "negative occupation");
    n += static_cast<std::size_t>(v);
  }
  require(n <= cap_, "occupation total above cap");
  std::size_t r = offsets_[n];
  std::size_t rem = n;
  for (std::size_t i = 0; i + 1 < modes_; ++i) {
    const std::size_t oi = static_cast<std::size_t>(occupation[i]);
    for (std::size_t v = oi + 1; v <= rem; ++v) r += compositions(rem - v, modes_ - i - 1);
    rem -= oi;
  }
  return r;
}

std::vector<int> SpeciesBasis::unrank(std::size_t local) const {
  require(local < size_, "local index out of range");
  std::vector<int> out(modes_);
  for (std::size_t m = 0; m < modes_; ++m) out[m] = occ_[local * modes_ + m];
  return out;
}

FockBasis::FockBasis(std::size_t psi_modes, std::size_t psi_cap, std::size_t a_modes, std::size_t a_cap)
    : psi_(psi_modes, psi_cap), a_(a_modes, a_cap) {
  const double dim = static_cast<double>(psi_.size()) * static_cast<double>(a_.size());
  if (dim > static_cast<double>(kMaxBasis))
    throw ConfigError("Fock basis dimension " + std::to_string(static_cast<long long>(dim)) + " too large");
  size_ = psi_.size() * a_.size();
  const std::size_t np = psi_cap + 1, na = a_cap + 1;
  block_offset_.resize(np * na + 1);
  std::size_t off = 0;
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t n = 0; n < na; ++n) {
      block_offset_[p * na + n] = off;
      off += psi_.sector_size(p) * a_.sector_size(n);
    }
  block_offset_[np * na] = off;
  psi_of_.resize(size_);
  a_of_.resize(size_);
  for (std::size_t lp = 0; lp < psi_.size(); ++lp)
    for (std::size_t la = 0; la < a_.size(); ++la) {
      const std::size_t i = index(lp, la);
      psi_of_[i] = static_cast<std::uint32_t>(lp);
      a_of_[i] = static_cast<std::uint32_t>(la);
    }
}

BasisPtr FockBasis::for_grid(const ModeGrid& grid, std::size_t psi_cap, std::size_t a_cap) {
  require(grid.cutoff_count() >= 1, "the cutoff keeps no boson modes");
  return std::make_shared<const FockBasis>(grid.size(), psi_cap, grid.cutoff_count(), a_cap);
}

std::size_t FockBasis::index(std::size_t lp, std::size_t la) const {
  const std::size_t p = psi_.total(lp), n = a_.total(la);
  return block_offset_[p * (a_.cap() + 1) + n] + (lp - psi_.sector_offset(p)) * a_.sector_size(n) +
         (la - a_.sector_offset(n));
}

std::size_t FockBasis::sector_offset(std::size_t p, std::size_t n) const {
  require(p <= psi_.cap() && n <= a_.cap(), "sector outside caps");
  return block_offset_[p * (a_.cap() + 1) + n];
}

std::size_t FockBasis::sector_size(std::size_t p, std::size_t n) const {
  require(p <= psi_.cap() && n <= a_.cap(), "sector outside caps");
  return psi_.sector_size(p) * a_.sector_size(n);
}

QuantumState zero_state(const BasisPtr& basis) {
  require(basis != nullptr, "null basis");
  return {basis, CVector::Zero(idx(basis->size()))};
}

QuantumState vacuum_state(const BasisPtr& basis) {
  QuantumState s = zero_state(basis);
  s.amplitudes[0] = 1.0;
  return s;
}

QuantumState random_state(const BasisPtr& basis, std::uint64_t seed) {
  QuantumState s = zero_state(basis);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < s.amplitudes.size(); ++i) s.amplitudes[i] = cplx(g(rng), g(rng));
  s.amplitudes.normalize();
  return s;
}

cplx inner(const QuantumState& l, const QuantumState& r) {
  require(l.basis == r.basis, "states live on different bases");
  return l.amplitudes.dot(r.amplitudes);
}

namespace {

// Accumulates coef * b_mode applied to `in` into `out`.
double ladder_accumulate(Species species, Ladder kind, std::size_t mode, cplx coef, const QuantumState& in,
                         CVector& out) {
  const FockBasis& B = *in.basis;
  const SpeciesBasis& S = B.species(species);
  require(mode < S.modes(), "mode index out of range for species");
  double leak = 0.0;
  const bool is_psi = species == Species::psi;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const cplx v = in.amplitudes[idx(i)];
    if (v == 0.0) continue;
    const std::size_t lp = B.psi_local(i), la = B.a_local(i);
    const std::size_t l = is_psi ? lp : la;
    const int n = S.occupation(l, mode);
    if (kind == Ladder::annihilate) {
      if (n == 0) continue;
      const auto t = static_cast<std::size_t>(S.lower(l, mode));
      const std::size_t j = is_psi ? B.index(t, la) : B.index(lp, t);
      out[idx(j)] += coef * std::sqrt(static_cast<double>(n)) * v;
    } else {
      const std::int64_t t = S.raise(l, mode);
      const double f = std::sqrt(static_cast<double>(n + 1));
      if (t < 0) {
        leak += std::norm(coef * f * v);
        continue;
      }
      const std::size_t tt = static_cast<std::size_t>(t);
      const std::size_t j = is_psi ? B.index(tt, la) : B.index(lp, tt);
      out[idx(j)] += coef * f * v;
    }
  }
  return leak;
}

}  // namespace

LadderResult apply_ladder(Species species, Ladder kind, std::size_t mode, const QuantumState& state) {
  LadderResult r{zero_state(state.basis), 0.0};
  r.leakage = ladder_accumulate(species, kind, mode, 1.0, state, r.state.amplitudes);
  return r;
}

LadderResult apply_field(Species species, Ladder kind, const CVector& f, const QuantumState& state) {
  const SpeciesBasis& S = state.basis->species(species);
  require(static_cast<std::size_t>(f.size()) == S.modes(), "test function has wrong length for species");
  LadderResult r{zero_state(state.basis), 0.0};
  if (kind == Ladder::annihilate) {
    for (std::size_t m = 0; m < S.modes(); ++m)
      if (f[idx(m)] != 0.0) ladder_accumulate(species, kind, m, f[idx(m)], state, r.state.amplitudes);
    return r;
  }
  // Leakage of a smeared creation operator is the norm of the dropped vector, not a sum over modes.
  const FockBasis& B = *state.basis;
  const bool is_psi = species == Species::psi;
  std::vector<std::pair<std::size_t, cplx>> dropped;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const cplx v = state.amplitudes[idx(i)];
    if (v == 0.0) continue;
    const std::size_t lp = B.psi_local(i), la = B.a_local(i);
    const std::size_t l = is_psi ? lp : la;
    for (std::size_t m = 0; m < S.modes(); ++m) {
      if (f[idx(m)] == 0.0) continue;
      const int n = S.occupation(l, m);
      const cplx c = f[idx(m)] * std::sqrt(static_cast<double>(n + 1)) * v;
      const std::int64_t t = S.raise(l, m);
      if (t < 0) {
        dropped.emplace_back(i * S.modes() + m, c);
        continue;
      }
      const std::size_t tt = static_cast<std::size_t>(t);
      r.state.amplitudes[idx(is_psi ? B.index(tt, la) : B.index(lp, tt))] += c;
    }
  }
  if (!dropped.empty()) {
    // Group dropped contributions by their (out-of-basis) target occupation.
    std::vector<std::pair<std::vector<int>, cplx>> targets;
    for (const auto& [key, c] : dropped) {
      const std::size_t i = key / S.modes(), m = key % S.modes();
      auto occ_psi = B.psi().unrank(B.psi_local(i));
      auto occ_a = B.a().unrank(B.a_local(i));
      auto& occ = is_psi ? occ_psi : occ_a;
      ++occ[m];
      std::vector<int> full = occ_psi;
      full.insert(full.end(), occ_a.begin(), occ_a.end());
      targets.emplace_back(std::move(full), c);
    }
    std::sort(targets.begin(), targets.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t k = 0; k < targets.size();) {
      cplx sum = 0.0;
      std::size_t e = k;
      while (e < targets.size() && targets[e].first == targets[k].first) sum += targets[e++].second;
      r.leakage += std::norm(sum);
      k = e;
    }
  }
  return r;
}

double commutator_check(Species species, std::size_t i, std::size_t j, const QuantumState& state) {
  const auto bj = apply_ladder(species, Ladder::create, j, state).state;
  const auto a = apply_ladder(species, Ladder::annihilate, i, bj).state;
  const auto bi = apply_ladder(species, Ladder::annihilate, i, state).state;
  const auto b = apply_ladder(species, Ladder::create, j, bi).state;
  CVector r = a.amplitudes - b.amplitudes;
  if (i == j) r -= state.amplitudes;
  return r.norm();
}

namespace {
template <class Keep>
QuantumState filter(const QuantumState& s, Keep keep) {
  QuantumState out = s;
  const FockBasis& B = *s.basis;
  for (std::size_t i = 0; i < B.size(); ++i)
    if (!keep(B.n1(i), B.n2(i))) out.amplitudes[idx(i)] = 0.0;
  return out;
}
}  // namespace

QuantumState sector_project(const QuantumState& s, std::size_t p, std::size_t n) {
  QuantumState out = zero_state(s.basis);
  const FockBasis& B = *s.basis;
  if (p > B.psi().cap() || n > B.a().cap()) return out;
  const std::size_t o = B.sector_offset(p, n), len = B.sector_size(p, n);
  out.amplitudes.segment(idx(o), idx(len)) = s.amplitudes.segment(idx(o), idx(len));
  return out;
}

QuantumState one_particle_project(const QuantumState& s) {
  return filter(s, [](std::size_t p, std::size_t n) { return p + n == 1; });
}

QuantumState number_cutoff(const QuantumState& s, std::size_t nu) {
  return filter(s, [nu](std::size_t p, std::size_t n) { return p <= nu && n <= nu; });
}

QuantumState psi_number_project(const QuantumState& s, std::size_t p0) {
  return filter(s, [p0](std::size_t p, std::size_t) { return p == p0; });
}

QuantumState a_number_project(const QuantumState& s, std::size_t n0) {
  return filter(s, [n0](std::size_t, std::size_t n) { return n == n0; });
}

double number_norm(const QuantumState& s, double delta) {
  const FockBasis& B = *s.basis;
  double acc = 0.0;
  for (std::size_t i = 0; i < B.size(); ++i) {
    const double w = std::pow(static_cast<double>(B.n1(i) + B.n2(i) + 1), delta);
    acc += w * std::norm(s.amplitudes[idx(i)]);
  }
  return std::sqrt(acc);
}

QuantumState embed(const QuantumState& s, const BasisPtr& target, double* discarded) {
  const FockBasis& S = *s.basis;
  const FockBasis& T = *target;
  require(S.psi().modes() == T.psi().modes() && S.a().modes() == T.a().modes(),
          "bases have different mode sets");
  QuantumState out = zero_state(target);
  double lost = 0.0;
  std::vector<int> op(S.psi().modes()), oa(S.a().modes());
  for (std::size_t i = 0; i < S.size(); ++i) {
    const cplx v = s.amplitudes[idx(i)];
    if (S.n1(i) > T.psi().cap() || S.n2(i) > T.a().cap()) {
      lost += std::norm(v);
      continue;
    }
    const auto lp = S.psi().occupations(S.psi_local(i));
    const auto la = S.a().occupations(S.a_local(i));
    for (std::size_t m = 0; m < op.size(); ++m) op[m] = lp[m];
    for (std::size_t m = 0; m < oa.size(); ++m) oa[m] = la[m];
    out.amplitudes[idx(T.index(T.psi().rank(op), T.a().rank(oa)))] = v;
  }
  if (discarded) *discarded = lost;
  return out;
}

}  // namespace nelson
