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

// Acceptance run: every criterion at its stated tolerance, one PASS/FAIL line each.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nelson/harness.hpp"
#include "nelson/io.hpp"

using namespace nelson;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> experiments;
  double max_seconds;  // wall-clock limit over all listed experiments, <= 0 for none
};

struct Runner {
  RunConfig config;
  std::filesystem::path out;
  std::size_t jobs = 1;
  std::map<std::string, ExperimentOutcome> done;

  const ExperimentOutcome& run(const std::string& name) {
    auto it = done.find(name);
    if (it != done.end()) return it->second;
    ExperimentOutcome o = run_experiment(name, config, jobs);
    write_outcome(o, out);
    return done.emplace(name, std::move(o)).first->second;
  }
};

void detail(const ExperimentOutcome& o) {
  if (!o.error.empty()) std::printf("      %s: error: %s\n", o.result.name.c_str(), o.error.c_str());
  for (const Assertion& a : o.assertions)
    std::printf("      %s %-44s %s%s\n", a.passed ? " " : "!", a.name.c_str(), format_double(a.value).c_str(),
                a.passed ? "" : "  (out of bounds)");
  for (const auto& [k, v] : o.result.diagnostics)
    std::printf("        %-42s %s\n", k.c_str(), format_double(v).c_str());
  if (o.result.has_fit)
    std::printf("        %-42s %s\n", "fitted slope", format_double(o.result.fit.slope).c_str());
}

bool report(int id, const std::string& title, bool ok, const std::string& note) {
  std::printf("%s  [%2d] %s%s%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), note.empty() ? "" : "  ", note.c_str());
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria for nelsonlab"};
  std::string out = "acceptance-results";
  std::string config;
  std::size_t jobs = 1;
  app.add_option("--out", out, "directory for outcomes and CSV files");
  app.add_option("--config", config, "JSON configuration (defaults when absent)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  Runner r;
  try {
    if (!config.empty()) r.config = RunConfig::load(config);
    r.config.validate();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  }
  r.out = out;
  r.jobs = jobs;
  std::filesystem::create_directories(r.out);

  const std::vector<Criterion> criteria{
      {1, "charge conservation", {"classical-charge"}, 10.0},
      {2, "Strang order", {"classical-order"}, 30.0},
      {3, "Picard and Strang agree", {"classical-picard"}, 0.0},
      {4, "CCR, adjointness and sparse-dense agreement", {"ccr", "sparse-dense"}, 0.0},
      {5, "exact structural zeros", {"structural-zeros"}, 0.0},
      {6, "theta identity", {"theta-identity"}, 60.0},
      {7, "one-particle preservation", {"one-particle"}, 0.0},
      {8, "H-delta propagator bound", {"hdelta-bound"}, 0.0},
      {9, "strong limit of W towards U2", {"strong-limit"}, 0.0},
      {10, "coherent and vacuum convergence rates", {"rates-coherent", "rates-vacuum"}, 600.0},
      {11, "theta residue", {"theta-residue"}, 0.0},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    bool ok = true;
    double seconds = 0.0;
    for (const std::string& name : c.experiments) {
      const ExperimentOutcome& o = r.run(name);
      ok = ok && o.passed();
      seconds += o.result.runtime_seconds;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.2f s", seconds);
    std::string note = buf;
    if (c.max_seconds > 0.0) {
      std::snprintf(buf, sizeof buf, ", limit %.0f s", c.max_seconds);
      note += buf;
      ok = ok && seconds < c.max_seconds;
    }
    note += ")";
    if (!report(c.id, c.title, ok, note)) ++failures;
    for (const std::string& name : c.experiments) detail(r.done.at(name));
  }

  // Repeat every experiment that finishes in seconds and compare the CSV bytes.
  std::vector<std::string> mismatched;
  std::size_t compared = 0;
  for (const auto& [name, first] : r.done) {
    if (first.result.runtime_seconds > 60.0) continue;
    const ExperimentOutcome again = run_experiment(name, r.config, r.jobs);
    ++compared;
    if (again.files != first.files || first.files.empty()) mismatched.push_back(name);
  }
  std::string note = "(" + std::to_string(compared) + " experiments repeated";
  for (const auto& m : mismatched) note += ", differs: " + m;
  note += ")";
  if (!report(12, "determinism of CSV output", mismatched.empty() && compared > 0, note)) ++failures;

  std::vector<nlohmann::json> outcomes;
  for (const auto& [name, o] : r.done) outcomes.push_back(o.to_json());
  emit_report(outcomes, r.config, r.out);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
