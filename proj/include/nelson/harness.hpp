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

#ifndef NELSON_HARNESS_HPP
#define NELSON_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelson/classical.hpp"
#include "nelson/lattice.hpp"
#include "nelson/observables.hpp"

namespace nelson {

struct ClassicalSettings {
  GridConfig grid{};  // d=1, L=2 pi, M=5, mu=1, sigma=1.5
  double horizon = 1.0;
  double dt = 1e-3;
  double charge_tolerance = 1e-8;
  std::vector<double> order_dts{0.02, 0.01, 0.005};
  double picard_horizon = 0.2;
  double picard_tolerance = 1e-10;
  std::size_t picard_intervals = 2000;
  std::vector<double> continuity_eps{1e-2, 5e-3, 2.5e-3};
};

struct QuantumSettings {
  GridConfig grid = quantum_default_grid();
  std::vector<double> lambdas{1.0, 0.70710678118654752, 0.5};
  double time = 0.5;
  std::vector<double> times{0.25, 0.5, 0.75, 1.0};
  double tail_tolerance = 1e-10;
  std::size_t psi_margin = 2;
  std::size_t a_margin = 6;
  std::size_t fluct_psi_cap = 8;
  std::size_t fluct_a_cap = 8;
  std::size_t one_particle_psi_cap = 16;
  std::size_t one_particle_a_cap = 16;
  std::size_t ccr_psi_cap = 13;
  std::size_t ccr_a_cap = 16;
  double dyson_tolerance = 1e-8;
  std::size_t dyson_order = 8;  // highest Dyson term per substep
  double propagator_tolerance = 1e-12;
  std::vector<std::size_t> identity_particles{1, 2, 3};
  double identity_tail = 1e-12;
  std::vector<std::size_t> residue_particles{1, 2, 3, 4};
  std::size_t residue_a_margin = 20;
  std::size_t theta_samples = 16;
  std::size_t panel = 5;
  std::vector<double> deltas{1.0, 2.0, 4.0};

  static GridConfig quantum_default_grid();
};

/// Complete run configuration. JSON keys mirror the field names; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 20240917;
  std::string output_dir = "results";
  ClassicalSettings classical;
  QuantumSettings quantum;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;
};

/// SHA-256 of the canonical (sorted-key, compact) JSON form of the config.
std::string config_hash(const RunConfig& config);

struct Assertion {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool passed = false;
  double margin = 0.0;  // distance to the nearest violated-or-active bound, positive when passing
};

struct ExperimentOutcome {
  ExperimentResult result;
  std::vector<Assertion> assertions;
  std::map<std::string, std::string> files;  // file name -> CSV content
  std::string error;                          // set when the experiment aborted

  bool passed() const;
  void check(const std::string& name, double value, double lower, double upper);
  nlohmann::json to_json() const;
};

struct ExperimentInfo {
  std::string name;
  std::string group;  // classical, quantum, fluct, rates, theta
  std::string description;
  std::function<ExperimentOutcome(const RunConfig&, std::size_t jobs)> run;
};

const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo& find_experiment(const std::string& name);

/// Runs one experiment; numerical failures are captured in the outcome instead of thrown.
ExperimentOutcome run_experiment(const std::string& name, const RunConfig& config, std::size_t jobs = 1);

/// Writes <dir>/<name>.json and every CSV file of the outcome.
void write_outcome(const ExperimentOutcome& outcome, const std::filesystem::path& dir);

/// Single JSON summary keyed by experiment name, embedding the config hash.
nlohmann::json build_report(const std::vector<nlohmann::json>& outcomes, const RunConfig& config);
/// Writes summary.json; throws ConfigError for an empty result list.
void emit_report(const std::vector<nlohmann::json>& outcomes, const RunConfig& config,
                 const std::filesystem::path& dir);

/// Deterministic generic initial data: Gaussian amplitudes from `seed`, both fields of norm 1.
ClassicalState initial_data(const ModeGrid& grid, std::uint64_t seed);

}  // namespace nelson

#endif  // NELSON_HARNESS_HPP
