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

#ifndef NELSON_LATTICE_HPP
#define NELSON_LATTICE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nelson/common.hpp"

namespace nelson {

/// Parameters of the periodic box that stands in for R^d.
struct GridConfig {
  int dimension = 1;
  double box_length = 2.0 * kPi;
  int points = 5;              // nodes per axis, must be odd
  double boson_mass = 1.0;     // mu, mass of the relativistic field
  double particle_mass = 1.0;  // M, mass of the Schroedinger particles
  double cutoff = 1.5;         // sigma, UV cutoff radius in momentum
  // Drop k = 0 from the cutoff support. Mandatory when boson_mass == 0,
  // because (2 omega(0))^{-1/2} diverges there.
  bool exclude_zero_mode = false;
};

/// Periodic lattice with M^d position nodes x_m = m L / M and momentum nodes
/// k_n = 2 pi n / L, n in [-(M-1)/2, (M-1)/2] per axis.
///
/// Modes are stored row-major over axes with the per-axis momentum index
/// running from the most negative to the most positive value, so for d = 1,
/// M = 5 the mode order is k = -2, -1, 0, 1, 2. Position nodes use the same
/// row-major layout with m = 0..M-1.
///
/// The discrete Fourier transform is unitary:
///   F(f)(k) = M^{-d/2} sum_x e^{-ikx} f(x),  F^{-1}(g)(x) = M^{-d/2} sum_k e^{ikx} g(k).
///
/// The relativistic form factor is f0(k) = c_chi (2 omega(k))^{-1/2} chi(k) with
/// c_chi = L^{-d/2}. This is the continuum (2 pi)^{-3/2} (2 omega)^{-1/2} chi
/// after replacing a(k) by a_k / (2 pi / L)^{d/2} so that the lattice modes obey
/// [a_k, a_k'^*] = delta_kk'. Classical and quantum builders both read f0 from here.
///
/// Immutable after construction.
class ModeGrid {
 public:
  explicit ModeGrid(const GridConfig& config);

  const GridConfig& config() const { return config_; }
  int dimension() const { return config_.dimension; }
  int points() const { return config_.points; }
  double box_length() const { return config_.box_length; }
  std::size_t size() const { return size_; }

  std::array<int, 3> momentum_index(std::size_t mode) const;
  std::array<double, 3> momentum(std::size_t mode) const;
  std::array<double, 3> position(std::size_t node) const;
  double momentum_squared(std::size_t mode) const { return k2_[mode]; }

  double dispersion(std::size_t mode) const { return omega_[mode]; }
  std::span<const double> dispersion_table() const { return omega_; }
  /// |k|^2 / (2 M) for a Schroedinger particle in `mode`.
  double kinetic_energy(std::size_t mode) const { return k2_[mode] / (2.0 * config_.particle_mass); }

  bool passes_cutoff(std::size_t mode) const { return mask_[mode] != 0; }
  const std::vector<std::uint8_t>& cutoff_mask() const { return mask_; }
  /// Grid modes with chi = 1, in grid order. Slot j of an "a-mode" vector refers to cutoff_modes()[j].
  const std::vector<std::size_t>& cutoff_modes() const { return cutoff_modes_; }
  std::size_t cutoff_count() const { return cutoff_modes_.size(); }
  /// Slot of `mode` among cutoff_modes(), or -1.
  std::ptrdiff_t cutoff_slot(std::size_t mode) const { return slot_[mode]; }
  /// Slot of -k for the a-mode in slot `slot`.
  std::size_t negated_slot(std::size_t slot) const;

  std::size_t zero_mode() const { return zero_mode_; }
  std::size_t negate(std::size_t mode) const;
  /// Mode index of k_mode + sign * k_by, wrapped periodically.
  std::size_t shift(std::size_t mode, std::size_t by, int sign) const;

  double coupling_constant() const { return c_chi_; }
  /// f0 on a grid mode; zero outside the cutoff support.
  double form_factor(std::size_t mode) const;
  /// f0 on the a-mode slots.
  const RVector& form_factors() const { return f0_slots_; }

  CVector fourier(const CVector& positions) const;
  CVector inverse_fourier(const CVector& momenta) const;
  /// Multiply a momentum-space field by chi.
  CVector apply_mask(const CVector& momenta) const;

  /// Expand an a-mode vector to the full momentum grid (zeros off the cutoff support).
  CVector scatter_cutoff(const CVector& slots) const;
  /// Restrict a full-grid momentum vector to the a-mode slots.
  CVector gather_cutoff(const CVector& momenta) const;

 private:
  std::size_t flat(const std::array<int, 3>& axis_index) const;
  CVector transform(const CVector& in, bool forward) const;

  GridConfig config_;
  std::size_t size_ = 0;
  int half_ = 0;
  std::vector<double> k2_;
  std::vector<double> omega_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> cutoff_modes_;
  std::vector<std::ptrdiff_t> slot_;
  std::size_t zero_mode_ = 0;
  double c_chi_ = 1.0;
  RVector f0_slots_;
  // FFTW plans, shared between copies; execution with new arrays is thread-safe.
  struct Plans;
  std::shared_ptr<const Plans> plans_;
};

/// chi over all momentum nodes.
std::vector<bool> cutoff_mask(const ModeGrid& grid);

}  // namespace nelson

#endif  // NELSON_LATTICE_HPP
