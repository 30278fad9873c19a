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

#include "nelson/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <string>

namespace nelson {

namespace {
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct ModeGrid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<std::size_t> fftw_of_mode;  // FFTW output slot holding each grid mode
  double scale = 1.0;

  Plans(int d, int m) {
    std::vector<int> dims(static_cast<std::size_t>(d), m);
    std::size_t n = 1;
    for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(m);
    std::vector<fftw_complex> a(n), b(n);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft(d, dims.data(), a.data(), b.data(), FFTW_FORWARD, flags);
    backward = fftw_plan_dft(d, dims.data(), a.data(), b.data(), FFTW_BACKWARD, flags);
    if (forward == nullptr || backward == nullptr) throw NumericalError("FFTW plan creation failed");
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

ModeGrid::ModeGrid(const GridConfig& config) : config_(config) {
  const int d = config.dimension;
  require(d >= 1 && d <= 3, "grid dimension must be 1, 2 or 3");
  require(config.points >= 3, "points per axis must be at least 3");
  require(config.points % 2 == 1, "points per axis must be odd so that k -> -k maps the grid to itself");
  require(std::isfinite(config.box_length) && config.box_length > 0.0, "box length must be positive");
  require(std::isfinite(config.particle_mass) && config.particle_mass > 0.0, "particle mass must be positive");
  require(std::isfinite(config.boson_mass) && config.boson_mass >= 0.0, "boson mass must be non-negative");
  require(std::isfinite(config.cutoff) && config.cutoff >= 0.0, "cutoff radius must be non-negative");

  half_ = (config.points - 1) / 2;
  size_ = 1;
  for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(config.points);
  require(size_ <= (1u << 22), "grid too large");

  k2_.resize(size_);
  omega_.resize(size_);
  mask_.assign(size_, 0);
  slot_.assign(size_, -1);
  const double mu2 = config.boson_mass * config.boson_mass;
  const double tol = 1e-12 * std::max(1.0, config.cutoff);
  for (std::size_t m = 0; m < size_; ++m) {
    const auto k = momentum(m);
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i)];
    k2_[m] = s;
    omega_[m] = std::sqrt(s + mu2);
    if (std::sqrt(s) <= config.cutoff + tol) mask_[m] = 1;
  }
  zero_mode_ = flat({0, 0, 0});
  if (config.exclude_zero_mode) mask_[zero_mode_] = 0;
  require(!(config.boson_mass == 0.0 && mask_[zero_mode_] != 0),
          "boson mass 0 makes the k = 0 coupling infinite; set exclude_zero_mode or a positive mass");

  for (std::size_t m = 0; m < size_; ++m) {
    if (mask_[m]) {
      slot_[m] = static_cast<std::ptrdiff_t>(cutoff_modes_.size());
      cutoff_modes_.push_back(m);
    }
  }
  c_chi_ = std::pow(config.box_length, -0.5 * d);
  f0_slots_.resize(static_cast<Eigen::Index>(cutoff_modes_.size()));
  for (std::size_t j = 0; j < cutoff_modes_.size(); ++j)
    f0_slots_[static_cast<Eigen::Index>(j)] = c_chi_ / std::sqrt(2.0 * omega_[cutoff_modes_[j]]);

  auto plans = std::make_shared<Plans>(d, config.points);
  plans->fftw_of_mode.resize(size_);
  const std::size_t mp = static_cast<std::size_t>(config.points);
  for (std::size_t m = 0; m < size_; ++m) {
    const auto n = momentum_index(m);
    std::size_t f = 0;
    for (int i = 0; i < d; ++i) {
      const int w = n[static_cast<std::size_t>(i)] >= 0 ? n[static_cast<std::size_t>(i)]
                                                        : n[static_cast<std::size_t>(i)] + config.points;
      f = f * mp + static_cast<std::size_t>(w);
    }
    plans->fftw_of_mode[m] = f;
  }
  plans->scale = 1.0 / std::sqrt(static_cast<double>(size_));
  plans_ = std::move(plans);
}

std::array<int, 3> ModeGrid::momentum_index(std::size_t mode) const {
  require(mode < size_, "mode index out of range");
  std::array<int, 3> n{0, 0, 0};
  std::size_t rest = mode;
  const std::size_t mp = static_cast<std::size_t>(config_.points);
  for (int i = config_.dimension - 1; i >= 0; --i) {
    n[static_cast<std::size_t>(i)] = static_cast<int>(rest % mp) - half_;
    rest /= mp;
  }
  return n;
}

std::array<double, 3> ModeGrid::momentum(std::size_t mode) const {
  const auto n = momentum_index(mode);
  const double dk = 2.0 * kPi / config_.box_length;
  return {dk * n[0], dk * n[1], dk * n[2]};
}

std::array<double, 3> ModeGrid::position(std::size_t node) const {
  require(node < size_, "position index out of range");
  std::array<double, 3> x{0.0, 0.0, 0.0};
  std::size_t rest = node;
  const std::size_t mp = static_cast<std::size_t>(config_.points);
  const double h = config_.box_length / config_.points;
  for (int i = config_.dimension - 1; i >= 0; --i) {
    x[static_cast<std::size_t>(i)] = h * static_cast<double>(rest % mp);
    rest /= mp;
  }
  return x;
}

std::size_t ModeGrid::flat(const std::array<int, 3>& n) const {
  std::size_t f = 0;
  const std::size_t mp = static_cast<std::size_t>(config_.points);
  for (int i = 0; i < config_.dimension; ++i) {
    int v = n[static_cast<std::size_t>(i)] + half_;
    v %= config_.points;
    if (v < 0) v += config_.points;
    f = f * mp + static_cast<std::size_t>(v);
  }
  return f;
}

std::size_t ModeGrid::negate(std::size_t mode) const {
  auto n = momentum_index(mode);
  for (auto& v : n) v = -v;
  return flat(n);
}

std::size_t ModeGrid::shift(std::size_t mode, std::size_t by, int sign) const {
  auto n = momentum_index(mode);
  const auto b = momentum_index(by);
  for (std::size_t i = 0; i < 3; ++i) n[i] += sign * b[i];
  return flat(n);
}

std::size_t ModeGrid::negated_slot(std::size_t slot) const {
  require(slot < cutoff_modes_.size(), "a-mode slot out of range");
  const auto s = slot_[negate(cutoff_modes_[slot])];
  return static_cast<std::size_t>(s);
}

double ModeGrid::form_factor(std::size_t mode) const {
  require(mode < size_, "mode index out of range");
  return mask_[mode] ? c_chi_ / std::sqrt(2.0 * omega_[mode]) : 0.0;
}

CVector ModeGrid::transform(const CVector& in, bool forward) const {
  if (static_cast<std::size_t>(in.size()) != size_)
    throw ConfigError("field length " + std::to_string(in.size()) + " does not match grid size " +
                      std::to_string(size_));
  CVector buf_in(static_cast<Eigen::Index>(size_)), buf_out(static_cast<Eigen::Index>(size_));
  const auto& map = plans_->fftw_of_mode;
  if (forward) {
    // Position nodes already use FFTW layout.
    buf_in = in;
  } else {
    for (std::size_t m = 0; m < size_; ++m) buf_in[static_cast<Eigen::Index>(map[m])] = in[static_cast<Eigen::Index>(m)];
  }
  fftw_execute_dft(forward ? plans_->forward : plans_->backward,
                   reinterpret_cast<fftw_complex*>(buf_in.data()),
                   reinterpret_cast<fftw_complex*>(buf_out.data()));
  CVector out(static_cast<Eigen::Index>(size_));
  if (forward) {
    for (std::size_t m = 0; m < size_; ++m) out[static_cast<Eigen::Index>(m)] = buf_out[static_cast<Eigen::Index>(map[m])];
  } else {
    out = buf_out;
  }
  out *= plans_->scale;
  return out;
}

CVector ModeGrid::fourier(const CVector& positions) const { return transform(positions, true); }

CVector ModeGrid::inverse_fourier(const CVector& momenta) const { return transform(momenta, false); }

CVector ModeGrid::apply_mask(const CVector& momenta) const {
  require(static_cast<std::size_t>(momenta.size()) == size_, "field length does not match grid size");
  CVector out = momenta;
  for (std::size_t m = 0; m < size_; ++m)
    if (!mask_[m]) out[static_cast<Eigen::Index>(m)] = 0.0;
  return out;
}

CVector ModeGrid::scatter_cutoff(const CVector& slots) const {
  require(static_cast<std::size_t>(slots.size()) == cutoff_modes_.size(), "a-mode vector has wrong length");
  CVector out = CVector::Zero(static_cast<Eigen::Index>(size_));
  for (std::size_t j = 0; j < cutoff_modes_.size(); ++j)
    out[static_cast<Eigen::Index>(cutoff_modes_[j])] = slots[static_cast<Eigen::Index>(j)];
  return out;
}

CVector ModeGrid::gather_cutoff(const CVector& momenta) const {
  require(static_cast<std::size_t>(momenta.size()) == size_, "field length does not match grid size");
  CVector out(static_cast<Eigen::Index>(cutoff_modes_.size()));
  for (std::size_t j = 0; j < cutoff_modes_.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = momenta[static_cast<Eigen::Index>(cutoff_modes_[j])];
  return out;
}

std::vector<bool> cutoff_mask(const ModeGrid& grid) {
  std::vector<bool> out(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) out[m] = grid.passes_cutoff(m);
  return out;
}

}  // namespace nelson
