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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nelson/harness.hpp"
#include "nelson/io.hpp"

using namespace nelson;
using nlohmann::json;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("nelson-harness-" + name);
  std::filesystem::remove_all(p);
  return p;
}
}  // namespace

TEST_CASE("default configuration validates and round-trips through JSON") {
  const RunConfig c;
  CHECK_NOTHROW(c.validate());
  const json j = c.to_json();
  const RunConfig back = RunConfig::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("partial configurations fill in defaults") {
  const RunConfig c = RunConfig::from_json(json::parse(R"({"seed": 7, "quantum": {"panel": 3}})"));
  CHECK(c.seed == 7);
  CHECK(c.quantum.panel == 3);
  CHECK(c.classical.dt == RunConfig{}.classical.dt);
}

TEST_CASE("unknown keys and invalid values are rejected") {
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"sede": 1})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"quantum": {"lambda": [1]}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"classical": {"dt": "small"}})")), ConfigError);
  RunConfig c;
  c.quantum.lambdas = {1.0, 0.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.quantum.lambdas = {0.5, 0.7, 1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.quantum.theta_samples = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = RunConfig{};
  c.classical.grid.points = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config hash is SHA-256 of the canonical form") {
  const RunConfig a;
  const std::string h = config_hash(a);
  CHECK(h.size() == 64);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  RunConfig b;
  b.seed += 1;
  CHECK(config_hash(b) != h);
  const json reordered = json::parse(a.to_json().dump());
  CHECK(config_hash(RunConfig::from_json(reordered)) == h);
}

TEST_CASE("config files load from disk") {
  const auto dir = scratch("load");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"seed": 3})";
  CHECK(RunConfig::load(dir / "c.json").seed == 3);
  std::ofstream(dir / "bad.json") << "{";
  CHECK_THROWS_AS(RunConfig::load(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), ConfigError);
}

TEST_CASE("CSV fields are quoted only when needed") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  std::ostringstream out;
  write_csv_row(out, {"x", "1,2", ""});
  CHECK(out.str() == "x,\"1,2\",\n");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("assertions record bounds and margins") {
  ExperimentOutcome o;
  o.check("inside", 0.5, 0.0, 1.0);
  CHECK(o.passed());
  CHECK(o.assertions.back().margin == doctest::Approx(0.5));
  o.check("outside", 2.0, 0.0, 1.0);
  CHECK_FALSE(o.passed());
  CHECK(o.assertions.back().margin < 0.0);
  o.check("nan", std::nan(""), 0.0, 1.0);
  CHECK_FALSE(o.assertions.back().passed);
}

TEST_CASE("registry names are unique and grouped") {
  std::set<std::string> names;
  const std::set<std::string> groups{"classical", "quantum", "fluct", "rates", "theta"};
  for (const auto& e : experiment_registry()) {
    CHECK(names.insert(e.name).second);
    CHECK(groups.count(e.group) == 1);
    CHECK_FALSE(e.description.empty());
  }
  CHECK(names.size() == 17);
  CHECK_THROWS_AS(find_experiment("nope"), ConfigError);
}

TEST_CASE("experiments are deterministic and reports are idempotent") {
  const RunConfig c;
  const ExperimentOutcome a = run_experiment("classical-order", c);
  const ExperimentOutcome b = run_experiment("classical-order", c);
  CHECK(a.passed());
  CHECK(a.files == b.files);
  CHECK_FALSE(a.files.empty());

  const auto dir = scratch("report");
  write_outcome(a, dir);
  CHECK(std::filesystem::exists(dir / "classical-order.json"));
  for (const auto& [name, content] : a.files) CHECK(slurp(dir / name) == content);
  emit_report({a.to_json()}, c, dir);
  const std::string first = slurp(dir / "summary.json");
  emit_report({b.to_json()}, c, dir);
  CHECK(slurp(dir / "summary.json") == first);
  const json report = json::parse(first);
  CHECK(report["config_hash"] == config_hash(c));
  CHECK(report["passed"] == true);
  CHECK_THROWS_AS(emit_report({}, c, dir), ConfigError);
}

TEST_CASE("initial data is seeded and normalized") {
  const ModeGrid grid(RunConfig{}.classical.grid);
  const ClassicalState a = initial_data(grid, 5), b = initial_data(grid, 5), c = initial_data(grid, 6);
  CHECK((a.u - b.u).norm() == 0.0);
  CHECK((a.u - c.u).norm() > 0.1);
  CHECK(a.u.norm() == doctest::Approx(1.0));
  CHECK(a.alpha.norm() == doctest::Approx(1.0));
}
