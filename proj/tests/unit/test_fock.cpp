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

#include <set>

#include "nelson/fock.hpp"
#include "support.hpp"

using namespace nelson;
using testing::binomial;
using testing::random_vector;

namespace {
Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

BasisPtr make(std::size_t mp, std::size_t pc, std::size_t ma, std::size_t ac) {
  return std::make_shared<const FockBasis>(mp, pc, ma, ac);
}

std::size_t at(const FockBasis& B, std::vector<int> p, std::vector<int> a) {
  return B.index(B.psi().rank(p), B.a().rank(a));
}
}  // namespace

TEST_CASE("species basis sizes are binomial counts") {
  for (std::size_t m : {1u, 2u, 3u, 5u})
    for (std::size_t cap : {0u, 1u, 4u, 9u}) {
      const SpeciesBasis s(m, cap);
      CHECK(static_cast<double>(s.size()) == binomial(cap + m, m));
      for (std::size_t n = 0; n <= cap; ++n) CHECK(static_cast<double>(s.sector_size(n)) == binomial(n + m - 1, m - 1));
    }
}

TEST_CASE("sectors are ordered by total then descending lexicographic composition") {
  const SpeciesBasis s(3, 2);
  const std::vector<std::vector<int>> expected{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0},
                                               {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
  REQUIRE(s.size() == expected.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.unrank(i) == expected[i]);
    CHECK(s.rank(expected[i]) == i);
  }
  CHECK_THROWS_AS(s.rank(std::vector<int>{3, 0, 0}), ConfigError);
}

TEST_CASE("raise and lower tables are consistent with occupations") {
  const SpeciesBasis s(3, 4);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t m = 0; m < 3; ++m) {
      const auto up = s.raise(i, m);
      if (s.total(i) == 4) {
        CHECK(up == -1);
      } else {
        REQUIRE(up >= 0);
        CHECK(s.occupation(static_cast<std::size_t>(up), m) == s.occupation(i, m) + 1);
        CHECK(s.lower(static_cast<std::size_t>(up), m) == static_cast<std::int64_t>(i));
      }
      if (s.occupation(i, m) == 0) CHECK(s.lower(i, m) == -1);
    }
}

TEST_CASE("two-species index is a bijection with the vacuum first") {
  const auto B = make(2, 3, 2, 2);
  std::set<std::size_t> seen;
  for (std::size_t lp = 0; lp < B->psi().size(); ++lp)
    for (std::size_t la = 0; la < B->a().size(); ++la) {
      const std::size_t i = B->index(lp, la);
      CHECK(B->psi_local(i) == lp);
      CHECK(B->a_local(i) == la);
      seen.insert(i);
    }
  CHECK(seen.size() == B->size());
  CHECK(B->index(0, 0) == FockBasis::vacuum());
  CHECK_THROWS_AS(FockBasis(6, 200, 6, 200), ConfigError);
}

TEST_CASE("ladder operators carry square-root factors") {
  const auto B = make(2, 3, 1, 2);
  QuantumState s = zero_state(B);
  s.amplitudes[ix(at(*B, {2, 0}, {1}))] = 1.0;
  const auto down = apply_ladder(Species::psi, Ladder::annihilate, 0, s);
  CHECK(std::abs(down.state.amplitudes[ix(at(*B, {1, 0}, {1}))] - std::sqrt(2.0)) < 1e-15);
  const auto up = apply_ladder(Species::a, Ladder::create, 0, s);
  CHECK(std::abs(up.state.amplitudes[ix(at(*B, {2, 0}, {2}))] - std::sqrt(2.0)) < 1e-15);
  CHECK(up.leakage == 0.0);
  const auto over = apply_ladder(Species::a, Ladder::create, 0, up.state);
  CHECK(over.state.norm() == 0.0);
  CHECK(over.leakage == doctest::Approx(6.0));
}

TEST_CASE("smeared fields are linear in the test function") {
  const auto B = make(3, 2, 2, 2);
  const CVector f = random_vector(3, 1);
  const auto r = apply_field(Species::psi, Ladder::create, f, vacuum_state(B));
  for (std::size_t q = 0; q < 3; ++q) {
    std::vector<int> o(3, 0);
    o[q] = 1;
    CHECK(std::abs(r.state.amplitudes[ix(at(*B, o, {0, 0}))] - f[ix(q)]) < 1e-15);
  }
  const auto back = apply_field(Species::psi, Ladder::annihilate, f.conjugate(), r.state);
  CHECK(std::abs(back.state.amplitudes[0] - f.squaredNorm()) < 1e-14);
}

TEST_CASE("commutation relations hold away from the caps and fail at them") {
  const auto B = make(3, 5, 2, 6);
  QuantumState s = random_state(B, 3);
  const QuantumState full = s;
  for (std::size_t i = 0; i < B->size(); ++i)
    if (B->n1(i) >= 5 || B->n2(i) >= 6) s.amplitudes[ix(i)] = 0.0;
  for (Species sp : {Species::psi, Species::a})
    for (std::size_t i = 0; i < B->species(sp).modes(); ++i)
      for (std::size_t j = 0; j < B->species(sp).modes(); ++j) CHECK(commutator_check(sp, i, j, s) < 1e-13);
  CHECK(commutator_check(Species::psi, 0, 0, full) > 1e-3);
}

TEST_CASE("annihilation and compressed creation are adjoint") {
  const auto B = make(3, 4, 2, 3);
  const QuantumState x = random_state(B, 4), y = random_state(B, 5);
  for (std::size_t m = 0; m < 3; ++m) {
    const cplx l = inner(x, apply_ladder(Species::psi, Ladder::annihilate, m, y).state);
    const cplx r = inner(apply_ladder(Species::psi, Ladder::create, m, x).state, y);
    CHECK(std::abs(l - r) < 1e-14);
  }
}

TEST_CASE("projections and weighted number norms") {
  const auto B = make(2, 3, 2, 3);
  const QuantumState s = random_state(B, 6);
  double total = 0.0;
  for (std::size_t p = 0; p <= 3; ++p)
    for (std::size_t n = 0; n <= 3; ++n) total += sector_project(s, p, n).amplitudes.squaredNorm();
  CHECK(total == doctest::Approx(1.0));
  const QuantumState one = one_particle_project(s);
  CHECK(one.amplitudes.squaredNorm() ==
        doctest::Approx(sector_project(s, 1, 0).amplitudes.squaredNorm() + sector_project(s, 0, 1).amplitudes.squaredNorm()));
  const QuantumState sec = sector_project(s, 2, 1);
  CHECK(number_norm(sec, 3.0) == doctest::Approx(std::pow(4.0, 1.5) * sec.norm()));
  CHECK(number_norm(s, 0.0) == doctest::Approx(1.0));
  const QuantumState cut = number_cutoff(s, 1);
  for (std::size_t i = 0; i < B->size(); ++i)
    if (B->n1(i) > 1 || B->n2(i) > 1) CHECK(cut.amplitudes[ix(i)] == cplx(0.0));
  CHECK(psi_number_project(s, 2).norm() == doctest::Approx(std::sqrt(
      [&] { double w = 0; for (std::size_t n = 0; n <= 3; ++n) w += sector_project(s, 2, n).amplitudes.squaredNorm(); return w; }())));
  CHECK(a_number_project(s, 0).norm() > 0.0);
}

TEST_CASE("embedding between bases preserves amplitudes and reports discarded weight") {
  const auto small = make(2, 2, 1, 2), large = make(2, 4, 1, 5);
  const QuantumState s = random_state(small, 7);
  double lost = -1.0;
  const QuantumState up = embed(s, large, &lost);
  CHECK(lost == 0.0);
  CHECK(up.norm() == doctest::Approx(1.0));
  const QuantumState down = embed(up, small, &lost);
  CHECK((down.amplitudes - s.amplitudes).norm() < 1e-15);
  const QuantumState big = random_state(large, 8);
  const QuantumState cut = embed(big, small, &lost);
  CHECK(cut.amplitudes.squaredNorm() + lost == doctest::Approx(1.0));
}
