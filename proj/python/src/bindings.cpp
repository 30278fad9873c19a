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

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nelson/classical.hpp"
#include "nelson/harness.hpp"
#include "nelson/observables.hpp"
#include "nelson/states.hpp"

namespace py = pybind11;
using namespace nelson;

namespace {

RunConfig parse_config(const std::string& text) {
  RunConfig c = text.empty() ? RunConfig{} : RunConfig::from_json(nlohmann::json::parse(text));
  c.validate();
  return c;
}

GridConfig grid_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::object();
  j["classical"]["grid"] = nlohmann::json::parse(text);
  return RunConfig::from_json(j).classical.grid;
}

py::dict trajectory_dict(const ModeGrid& grid, const Trajectory& tr) {
  const auto n = static_cast<Eigen::Index>(tr.states.size());
  Eigen::VectorXd t(n);
  Eigen::MatrixXcd u(n, static_cast<Eigen::Index>(grid.size()));
  Eigen::MatrixXcd alpha(n, static_cast<Eigen::Index>(grid.cutoff_count()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const ClassicalState& s = tr.states[static_cast<std::size_t>(i)];
    t[i] = s.t;
    u.row(i) = s.u.transpose();
    alpha.row(i) = s.alpha.transpose();
  }
  py::dict d;
  d["t"] = t;
  d["u"] = u;
  d["alpha"] = alpha;
  d["max_charge_drift"] = tr.max_charge_drift;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Classical and quantum experiments for the Nelson model";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("default_config", [] { return RunConfig{}.to_json().dump(); }, "Default configuration as JSON text.");
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("config"),
        "SHA-256 of the canonical configuration.");
  m.def(
      "experiments",
      [] {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& e : experiment_registry()) out.emplace_back(e.name, e.group, e.description);
        return out;
      },
      "(name, group, description) for every registered experiment.");
  m.def(
      "run_experiment",
      [](const std::string& name, const std::string& config, std::size_t jobs) {
        const RunConfig c = parse_config(config);
        ExperimentOutcome o;
        {
          py::gil_scoped_release release;
          o = run_experiment(name, c, jobs);
        }
        return py::make_tuple(o.to_json().dump(), o.files);
      },
      py::arg("name"), py::arg("config") = "", py::arg("jobs") = 1,
      "Runs one experiment; returns (outcome JSON text, {file name: CSV text}).");

  m.def(
      "mode_grid",
      [](const std::string& grid) {
        const ModeGrid g(grid_from_json(grid));
        py::dict d;
        std::vector<double> k, x, omega;
        for (std::size_t i = 0; i < g.size(); ++i) {
          k.push_back(g.momentum(i)[0]);
          x.push_back(g.position(i)[0]);
          omega.push_back(g.dispersion(i));
        }
        d["size"] = g.size();
        d["cutoff_modes"] = g.cutoff_modes();
        d["form_factors"] = Eigen::VectorXd(g.form_factors());
        d["momentum_first_axis"] = k;
        d["position_first_axis"] = x;
        d["dispersion"] = omega;
        return d;
      },
      py::arg("grid") = "{}", "Lattice tables of a grid given as JSON text.");
  m.def(
      "initial_data",
      [](const std::string& grid, std::uint64_t seed) {
        const ClassicalState s = initial_data(ModeGrid(grid_from_json(grid)), seed);
        return py::make_tuple(s.u, s.alpha);
      },
      py::arg("grid") = "{}", py::arg("seed") = RunConfig{}.seed, "Seeded normalized (u, alpha).");
  m.def(
      "solve",
      [](const std::string& grid, const CVector& u, const CVector& alpha, double T, double dt, std::string method) {
        const ModeGrid g(grid_from_json(grid));
        SolveOptions o;
        o.dt = dt;
        if (method == "dopri")
          o.method = SolveOptions::Method::dopri;
        else if (method != "strang")
          throw ConfigError("method must be 'strang' or 'dopri'");
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = solve(g, ClassicalState{0.0, u, alpha}, T, o);
        }
        return trajectory_dict(g, tr);
      },
      py::arg("grid"), py::arg("u"), py::arg("alpha"), py::arg("T"), py::arg("dt") = 1e-3,
      py::arg("method") = "strang", "Classical trajectory as {t, u, alpha, max_charge_drift}.");
  m.def("charge", [](const CVector& u) { return charge(u); }, py::arg("u"));

  m.def("poisson_tail", &poisson_tail, py::arg("mean"), py::arg("cap"));
  m.def("required_cap", &required_cap, py::arg("mean"), py::arg("tolerance"));
  m.def("d_factor", &d_factor, py::arg("x"));
  m.def(
      "rate_fit",
      [](const std::vector<double>& lambdas, const std::vector<double>& errors) {
        const RateFit f = rate_fit(lambdas, errors);
        return py::make_tuple(f.slope, f.intercept, f.residual);
      },
      py::arg("lambdas"), py::arg("errors"), "Log-log least squares: (slope, intercept, rms residual).");
}
