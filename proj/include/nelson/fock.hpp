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

#ifndef NELSON_FOCK_HPP
#define NELSON_FOCK_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nelson/common.hpp"
#include "nelson/lattice.hpp"

namespace nelson {

enum class Species { psi, a };
enum class Ladder { create, annihilate };

/// Occupation vectors of one species over `modes` modes with total <= cap.
///
/// States are grouped by total n = 0..cap; inside a group they follow the
/// lexicographic order of the occupation vector (first mode most significant,
/// larger occupation first). Ranking uses a binomial table.
class SpeciesBasis {
 public:
  SpeciesBasis(std::size_t modes, std::size_t cap);

  std::size_t modes() const { return modes_; }
  std::size_t cap() const { return cap_; }
  std::size_t size() const { return size_; }
  /// Number of occupations with total exactly n.
  std::size_t sector_size(std::size_t n) const;
  std::size_t sector_offset(std::size_t n) const { return offsets_[n]; }

  int occupation(std::size_t local, std::size_t mode) const {
    return occ_[local * modes_ + mode];
  }
  std::span<const std::uint8_t> occupations(std::size_t local) const {
    return {occ_.data() + local * modes_, modes_};
  }
  std::size_t total(std::size_t local) const { return totals_[local]; }

  /// Index of an occupation vector; throws ConfigError when it is outside the basis.
  std::size_t rank(std::span<const int> occupation) const;
  std::vector<int> unrank(std::size_t local) const;

  /// Local index after adding one quantum to `mode`, or -1 above the cap.
  std::int64_t raise(std::size_t local, std::size_t mode) const { return raise_[local * modes_ + mode]; }
  /// Local index after removing one quantum from `mode`, or -1 when empty.
  std::int64_t lower(std::size_t local, std::size_t mode) const { return lower_[local * modes_ + mode]; }

 private:
  std::size_t compositions(std::size_t total, std::size_t parts) const;

  std::size_t modes_, cap_, size_ = 0;
  std::vector<std::size_t> binom_;  // (cap + modes + 1)^2 table
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> occ_;
  std::vector<std::uint32_t> totals_;
  std::vector<std::int64_t> raise_, lower_;
};

/// Tensor product of a psi basis (all lattice momenta) and an a basis (cutoff
/// modes), stored in contiguous (N1, N2) sector blocks ordered by (N1, N2).
class FockBasis {
 public:
  FockBasis(std::size_t psi_modes, std::size_t psi_cap, std::size_t a_modes, std::size_t a_cap);
  static std::shared_ptr<const FockBasis> for_grid(const ModeGrid& grid, std::size_t psi_cap, std::size_t a_cap);

  const SpeciesBasis& psi() const { return psi_; }
  const SpeciesBasis& a() const { return a_; }
  const SpeciesBasis& species(Species s) const { return s == Species::psi ? psi_ : a_; }
  std::size_t size() const { return size_; }

  std::size_t index(std::size_t psi_local, std::size_t a_local) const;
  std::size_t psi_local(std::size_t i) const { return psi_of_[i]; }
  std::size_t a_local(std::size_t i) const { return a_of_[i]; }
  std::size_t n1(std::size_t i) const { return psi_.total(psi_of_[i]); }
  std::size_t n2(std::size_t i) const { return a_.total(a_of_[i]); }
  std::size_t sector_offset(std::size_t p, std::size_t n) const;
  std::size_t sector_size(std::size_t p, std::size_t n) const;
  static constexpr std::size_t vacuum() { return 0; }

 private:
  SpeciesBasis psi_, a_;
  std::size_t size_ = 0;
  std::vector<std::size_t> block_offset_;  // (psi_cap + 1) x (a_cap + 1)
  std::vector<std::uint32_t> psi_of_, a_of_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

struct QuantumState {
  BasisPtr basis;
  CVector amplitudes;

  double norm() const { return amplitudes.norm(); }
};

QuantumState zero_state(const BasisPtr& basis);
QuantumState vacuum_state(const BasisPtr& basis);
/// Complex Gaussian amplitudes from a seeded engine, normalized to one.
QuantumState random_state(const BasisPtr& basis, std::uint64_t seed);
std::complex<double> inner(const QuantumState& lhs, const QuantumState& rhs);

struct LadderResult {
  QuantumState state;
  double leakage = 0.0;  // squared norm discarded by the cap
};

LadderResult apply_ladder(Species species, Ladder kind, std::size_t mode, const QuantumState& state);

/// Smeared operators with linear test functions: a^*(f) = sum_k f_k a_k^*, a(f) = sum_k f_k a_k.
LadderResult apply_field(Species species, Ladder kind, const CVector& f, const QuantumState& state);

/// || ([b_i, b_j^*] - delta_ij) state ||.
double commutator_check(Species species, std::size_t i, std::size_t j, const QuantumState& state);

QuantumState sector_project(const QuantumState& state, std::size_t p, std::size_t n);
/// Projector onto H_{1,0} + H_{0,1}.
QuantumState one_particle_project(const QuantumState& state);
/// Zeroes components with N1 > nu or N2 > nu.
QuantumState number_cutoff(const QuantumState& state, std::size_t nu);
/// Zeroes components with N1 != p.
QuantumState psi_number_project(const QuantumState& state, std::size_t p);
/// Zeroes components with N2 != n.
QuantumState a_number_project(const QuantumState& state, std::size_t n);

/// || (N + 1)^{delta/2} state ||, N = N1 + N2.
double number_norm(const QuantumState& state, double delta);

/// Copy of `state` expressed on `target`; components outside target caps are
/// dropped and their squared norm returned through `discarded`.
QuantumState embed(const QuantumState& state, const BasisPtr& target, double* discarded = nullptr);

}  // namespace nelson

#endif  // NELSON_FOCK_HPP
