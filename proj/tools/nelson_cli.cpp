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

// nelson: batch driver for the experiment registry.
//
//   nelson <group> [--config FILE] [--out DIR] [--experiment NAME] [--jobs N]
//   nelson report  [--config FILE] [--out DIR]
//
// Exit status: 0 when every assertion passes, 1 on an assertion failure, 2 on a configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nelson/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string experiment;
  std::size_t jobs = 1;
};

nelson::RunConfig load(const Options& o) {
  return o.config.empty() ? nelson::RunConfig{} : nelson::RunConfig::load(o.config);
}

std::filesystem::path output_dir(const Options& o, const nelson::RunConfig& cfg) {
  return o.out.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(o.out);
}

int run_group(const std::string& group, const Options& o) {
  const nelson::RunConfig cfg = load(o);
  const auto dir = output_dir(o, cfg);
  std::vector<std::string> names;
  if (!o.experiment.empty()) {
    const auto& info = nelson::find_experiment(o.experiment);
    if (info.group != group)
      throw nelson::ConfigError("experiment '" + o.experiment + "' belongs to group '" + info.group + "'");
    names.push_back(info.name);
  } else {
    for (const auto& e : nelson::experiment_registry())
      if (e.group == group) names.push_back(e.name);
  }
  bool all = true;
  for (const auto& name : names) {
    const nelson::ExperimentOutcome outcome = nelson::run_experiment(name, cfg, o.jobs);
    nelson::write_outcome(outcome, dir);
    const bool ok = outcome.passed();
    all = all && ok;
    std::printf("%-22s %s  (%.2f s)\n", name.c_str(), ok ? "PASS" : "FAIL", outcome.result.runtime_seconds);
    for (const auto& a : outcome.assertions)
      if (!a.passed) std::printf("    failed: %s = %.6g\n", a.name.c_str(), a.value);
    if (!outcome.error.empty()) std::printf("    error: %s\n", outcome.error.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}

int report(const Options& o) {
  const nelson::RunConfig cfg = load(o);
  const auto dir = output_dir(o, cfg);
  std::vector<nlohmann::json> outcomes;
  for (const auto& e : nelson::experiment_registry()) {
    const auto path = dir / (e.name + ".json");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    try {
      outcomes.push_back(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& err) {
      throw nelson::ConfigError("malformed result file " + path.string() + ": " + err.what());
    }
  }
  nelson::emit_report(outcomes, cfg, dir);
  bool all = true;
  for (const auto& j : outcomes) {
    const bool ok = j.at("passed").get<bool>();
    all = all && ok;
    std::printf("%-22s %s\n", j.at("name").get<std::string>().c_str(), ok ? "PASS" : "FAIL");
  }
  std::printf("summary written to %s\n", (dir / "summary.json").string().c_str());
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nelson: classical and quantum experiments for the Nelson model"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> groups{
      {"classical", "classical field equations"},
      {"quantum", "Fock space operator checks"},
      {"fluct", "fluctuation dynamics"},
      {"rates", "classical-limit convergence rates"},
      {"theta", "product states and the theta residue"}};
  std::vector<std::pair<CLI::App*, std::string>> commands;
  for (const auto& [name, help] : groups) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--experiment", opt.experiment, "run a single experiment of this group");
    sub->add_option("--jobs", opt.jobs, "concurrent tasks")->check(CLI::PositiveNumber);
    commands.emplace_back(sub, name);
  }
  CLI::App* rep = app.add_subcommand("report", "collect results into summary.json");
  rep->add_option("--config", opt.config, "JSON configuration file")->check(CLI::ExistingFile);
  rep->add_option("--out", opt.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    if (rep->parsed()) return report(opt);
    for (const auto& [sub, name] : commands)
      if (sub->parsed()) return run_group(name, opt);
  } catch (const nelson::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
