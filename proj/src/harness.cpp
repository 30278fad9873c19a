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

#include "nelson/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nelson/io.hpp"

namespace nelson {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!keys.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json grid_json(const GridConfig& g) {
  return json{{"dimension", g.dimension},     {"box_length", g.box_length}, {"points", g.points},
              {"boson_mass", g.boson_mass},   {"particle_mass", g.particle_mass},
              {"cutoff", g.cutoff},           {"exclude_zero_mode", g.exclude_zero_mode}};
}

GridConfig grid_from(const json& j, GridConfig g, const std::string& where) {
  reject_unknown(j, {"dimension", "box_length", "points", "boson_mass", "particle_mass", "cutoff", "exclude_zero_mode"},
                 where);
  read(j, "dimension", g.dimension, where);
  read(j, "box_length", g.box_length, where);
  read(j, "points", g.points, where);
  read(j, "boson_mass", g.boson_mass, where);
  read(j, "particle_mass", g.particle_mass, where);
  read(j, "cutoff", g.cutoff, where);
  read(j, "exclude_zero_mode", g.exclude_zero_mode, where);
  return g;
}

void require_positive(const std::vector<double>& v, const std::string& what) {
  require(!v.empty(), what + " must not be empty");
  for (double x : v) require(std::isfinite(x) && x > 0.0, what + " entries must be positive");
}

double bound_margin(double value, double lower, double upper) {
  double m = std::numeric_limits<double>::infinity();
  if (std::isfinite(lower)) m = std::min(m, value - lower);
  if (std::isfinite(upper)) m = std::min(m, upper - value);
  return m;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

GridConfig QuantumSettings::quantum_default_grid() {
  GridConfig g;
  g.points = 3;
  g.boson_mass = 0.0;
  g.cutoff = 1.0;
  g.exclude_zero_mode = true;
  return g;
}

json RunConfig::to_json() const {
  const auto& c = classical;
  const auto& q = quantum;
  return json{
      {"seed", seed},
      {"output_dir", output_dir},
      {"classical",
       {{"grid", grid_json(c.grid)},
        {"horizon", c.horizon},
        {"dt", c.dt},
        {"charge_tolerance", c.charge_tolerance},
        {"order_dts", c.order_dts},
        {"picard_horizon", c.picard_horizon},
        {"picard_tolerance", c.picard_tolerance},
        {"picard_intervals", c.picard_intervals},
        {"continuity_eps", c.continuity_eps}}},
      {"quantum",
       {{"grid", grid_json(q.grid)},
        {"lambdas", q.lambdas},
        {"time", q.time},
        {"times", q.times},
        {"tail_tolerance", q.tail_tolerance},
        {"psi_margin", q.psi_margin},
        {"a_margin", q.a_margin},
        {"fluct_psi_cap", q.fluct_psi_cap},
        {"fluct_a_cap", q.fluct_a_cap},
        {"one_particle_psi_cap", q.one_particle_psi_cap},
        {"one_particle_a_cap", q.one_particle_a_cap},
        {"ccr_psi_cap", q.ccr_psi_cap},
        {"ccr_a_cap", q.ccr_a_cap},
        {"dyson_tolerance", q.dyson_tolerance},
        {"dyson_order", q.dyson_order},
        {"propagator_tolerance", q.propagator_tolerance},
        {"identity_particles", q.identity_particles},
        {"identity_tail", q.identity_tail},
        {"residue_particles", q.residue_particles},
        {"residue_a_margin", q.residue_a_margin},
        {"theta_samples", q.theta_samples},
        {"panel", q.panel},
        {"deltas", q.deltas}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig r;
  reject_unknown(j, {"seed", "output_dir", "classical", "quantum"}, "config");
  read(j, "seed", r.seed, "config");
  read(j, "output_dir", r.output_dir, "config");
  if (j.contains("classical")) {
    const json& c = j.at("classical");
    const std::string w = "classical";
    reject_unknown(c,
                   {"grid", "horizon", "dt", "charge_tolerance", "order_dts", "picard_horizon", "picard_tolerance",
                    "picard_intervals", "continuity_eps"},
                   w);
    auto& s = r.classical;
    if (c.contains("grid")) s.grid = grid_from(c.at("grid"), s.grid, w + ".grid");
    read(c, "horizon", s.horizon, w);
    read(c, "dt", s.dt, w);
    read(c, "charge_tolerance", s.charge_tolerance, w);
    read(c, "order_dts", s.order_dts, w);
    read(c, "picard_horizon", s.picard_horizon, w);
    read(c, "picard_tolerance", s.picard_tolerance, w);
    read(c, "picard_intervals", s.picard_intervals, w);
    read(c, "continuity_eps", s.continuity_eps, w);
  }
  if (j.contains("quantum")) {
    const json& q = j.at("quantum");
    const std::string w = "quantum";
    reject_unknown(q,
                   {"grid", "lambdas", "time", "times", "tail_tolerance", "psi_margin", "a_margin", "fluct_psi_cap",
                    "fluct_a_cap", "one_particle_psi_cap", "one_particle_a_cap", "ccr_psi_cap", "ccr_a_cap",
                    "dyson_tolerance", "dyson_order", "propagator_tolerance", "identity_particles", "identity_tail",
                    "residue_particles", "residue_a_margin", "theta_samples", "panel", "deltas"},
                   w);
    auto& s = r.quantum;
    if (q.contains("grid")) s.grid = grid_from(q.at("grid"), s.grid, w + ".grid");
    read(q, "lambdas", s.lambdas, w);
    read(q, "time", s.time, w);
    read(q, "times", s.times, w);
    read(q, "tail_tolerance", s.tail_tolerance, w);
    read(q, "psi_margin", s.psi_margin, w);
    read(q, "a_margin", s.a_margin, w);
    read(q, "fluct_psi_cap", s.fluct_psi_cap, w);
    read(q, "fluct_a_cap", s.fluct_a_cap, w);
    read(q, "one_particle_psi_cap", s.one_particle_psi_cap, w);
    read(q, "one_particle_a_cap", s.one_particle_a_cap, w);
    read(q, "ccr_psi_cap", s.ccr_psi_cap, w);
    read(q, "ccr_a_cap", s.ccr_a_cap, w);
    read(q, "dyson_tolerance", s.dyson_tolerance, w);
    read(q, "dyson_order", s.dyson_order, w);
    read(q, "propagator_tolerance", s.propagator_tolerance, w);
    read(q, "identity_particles", s.identity_particles, w);
    read(q, "identity_tail", s.identity_tail, w);
    read(q, "residue_particles", s.residue_particles, w);
    read(q, "residue_a_margin", s.residue_a_margin, w);
    read(q, "theta_samples", s.theta_samples, w);
    read(q, "panel", s.panel, w);
    read(q, "deltas", s.deltas, w);
  }
  r.validate();
  return r;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::validate() const {
  ModeGrid check_classical(classical.grid);
  ModeGrid check_quantum(quantum.grid);
  const auto& c = classical;
  require(c.horizon > 0.0 && c.dt > 0.0 && c.dt <= c.horizon, "classical: need 0 < dt <= horizon");
  require(c.charge_tolerance > 0.0, "classical.charge_tolerance must be positive");
  require(c.order_dts.size() >= 2, "classical.order_dts needs at least two step sizes");
  require_positive(c.order_dts, "classical.order_dts");
  for (std::size_t i = 1; i < c.order_dts.size(); ++i)
    require(std::abs(c.order_dts[i - 1] / c.order_dts[i] - 2.0) < 1e-12, "classical.order_dts must halve");
  require(c.picard_horizon > 0.0 && c.picard_tolerance > 0.0 && c.picard_intervals >= 4,
          "classical: invalid Picard settings");
  require(c.continuity_eps.size() >= 2, "classical.continuity_eps needs at least two values");
  require_positive(c.continuity_eps, "classical.continuity_eps");

  const auto& q = quantum;
  require(q.lambdas.size() >= 3, "quantum.lambdas needs at least three values");
  require_positive(q.lambdas, "quantum.lambdas");
  for (std::size_t i = 1; i < q.lambdas.size(); ++i)
    require(q.lambdas[i] < q.lambdas[i - 1], "quantum.lambdas must be strictly decreasing");
  require(q.time > 0.0, "quantum.time must be positive");
  require_positive(q.times, "quantum.times");
  require(std::is_sorted(q.times.begin(), q.times.end()), "quantum.times must be increasing");
  require(q.tail_tolerance > 0.0 && q.tail_tolerance < 1.0, "quantum.tail_tolerance must lie in (0, 1)");
  require(q.identity_tail > 0.0 && q.identity_tail < 1.0, "quantum.identity_tail must lie in (0, 1)");
  require(q.fluct_psi_cap >= 2 && q.fluct_a_cap >= 2, "fluctuation caps must be at least 2");
  require(q.one_particle_psi_cap >= 2 && q.one_particle_a_cap >= 2, "one-particle caps must be at least 2");
  require(q.ccr_psi_cap >= 1 && q.ccr_a_cap >= 1, "CCR caps must be at least 1");
  require(q.dyson_tolerance > 0.0 && q.propagator_tolerance > 0.0, "tolerances must be positive");
  require(q.dyson_order >= 1 && q.dyson_order <= 12, "quantum.dyson_order must lie in [1, 12]");
  require(!q.identity_particles.empty() && !q.residue_particles.empty(), "particle lists must not be empty");
  for (auto x : q.identity_particles) require(x >= 1, "particle numbers must be at least 1");
  for (auto x : q.residue_particles) require(x >= 1, "particle numbers must be at least 1");
  require(q.theta_samples >= 4 && q.theta_samples % 2 == 0, "quantum.theta_samples must be even and >= 4");
  require(q.panel >= 1, "quantum.panel must be at least 1");
  require_positive(q.deltas, "quantum.deltas");
}

std::string config_hash(const RunConfig& config) {
  const std::string text = config.to_json().dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

bool ExperimentOutcome::passed() const {
  if (!error.empty() || assertions.empty()) return false;
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

void ExperimentOutcome::check(const std::string& name, double value, double lower, double upper) {
  Assertion a;
  a.name = name;
  a.value = value;
  a.lower = lower;
  a.upper = upper;
  a.passed = std::isfinite(value) && value >= lower && value <= upper;
  a.margin = bound_margin(value, lower, upper);
  assertions.push_back(a);
}

json ExperimentOutcome::to_json() const {
  json j;
  j["name"] = result.name;
  j["passed"] = passed();
  if (!error.empty()) j["error"] = error;
  json list = json::array();
  for (const auto& a : assertions)
    list.push_back({{"name", a.name},
                    {"value", finite_or_null(a.value)},
                    {"lower", finite_or_null(a.lower)},
                    {"upper", finite_or_null(a.upper)},
                    {"passed", a.passed},
                    {"margin", finite_or_null(a.margin)}});
  j["assertions"] = list;
  j["lambdas"] = result.lambdas;
  j["errors"] = result.errors;
  if (result.has_fit)
    j["fit"] = {{"slope", result.fit.slope}, {"intercept", result.fit.intercept}, {"residual", result.fit.residual}};
  json diag = json::object();
  for (const auto& [k, v] : result.diagnostics) diag[k] = finite_or_null(v);
  j["diagnostics"] = diag;
  j["runtime_seconds"] = result.runtime_seconds;
  std::vector<std::string> files;
  for (const auto& [name, content] : this->files) files.push_back(name);
  j["files"] = files;
  return j;
}

const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return e;
  throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentOutcome run_experiment(const std::string& name, const RunConfig& config, std::size_t jobs) {
  const ExperimentInfo& info = find_experiment(name);
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutcome out;
  try {
    out = info.run(config, std::max<std::size_t>(jobs, 1));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    out = ExperimentOutcome{};
    out.error = e.what();
  }
  out.result.name = name;
  out.result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void write_outcome(const ExperimentOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : outcome.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    f << content;
  }
  std::ofstream f(dir / (outcome.result.name + ".json"), std::ios::binary);
  if (!f) throw ConfigError("cannot write results to " + dir.string());
  f << outcome.to_json().dump(2) << '\n';
}

json build_report(const std::vector<json>& outcomes, const RunConfig& config) {
  require(!outcomes.empty(), "no experiment results to report");
  json report;
  report["config_hash"] = config_hash(config);
  report["config"] = config.to_json();
  json experiments = json::object();
  bool all = true;
  for (const auto& o : outcomes) {
    const std::string name = o.at("name").get<std::string>();
    json entry = o;
    entry.erase("runtime_seconds");
    experiments[name] = entry;
    all = all && o.at("passed").get<bool>();
  }
  report["experiments"] = experiments;
  report["passed"] = all;
  return report;
}

void emit_report(const std::vector<json>& outcomes, const RunConfig& config, const std::filesystem::path& dir) {
  const json report = build_report(outcomes, config);
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "summary.json", std::ios::binary);
  if (!f) throw ConfigError("cannot write summary to " + dir.string());
  f << report.dump(2) << '\n';
}

ClassicalState initial_data(const ModeGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ClassicalState s;
  s.u.resize(static_cast<Eigen::Index>(grid.size()));
  s.alpha.resize(static_cast<Eigen::Index>(grid.cutoff_count()));
  for (auto& z : s.u) z = cplx(normal(rng), normal(rng));
  for (auto& z : s.alpha) z = cplx(normal(rng), normal(rng));
  s.u /= s.u.norm();
  if (s.alpha.size() > 0) s.alpha /= s.alpha.norm();
  return s;
}

}  // namespace nelson
