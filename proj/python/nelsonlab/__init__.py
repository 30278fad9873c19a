# Copyright 2026 The nelsonlab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Classical and quantum experiments for the Nelson model.

Configurations are plain dicts with the same keys as the JSON files read by the
``nelson`` command line tool.
"""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    NumericalError,
    charge,
    d_factor,
    poisson_tail,
    required_cap,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "charge",
    "config_hash",
    "d_factor",
    "default_config",
    "experiments",
    "initial_data",
    "mode_grid",
    "poisson_tail",
    "rate_fit",
    "required_cap",
    "run_experiment",
    "solve",
]


def _dump(obj):
    return "" if obj is None else _json.dumps(obj)


def default_config():
    """Complete default configuration."""
    return _json.loads(_core.default_config())


def config_hash(config=None):
    """SHA-256 hex digest of the canonical configuration."""
    return _core.config_hash(_dump(config))


def experiments():
    """List of dicts with name, group and description."""
    return [{"name": n, "group": g, "description": d} for n, g, d in _core.experiments()]


def run_experiment(name, config=None, jobs=1):
    """Run one experiment; returns (outcome dict, {file name: CSV text})."""
    outcome, files = _core.run_experiment(name, _dump(config), jobs)
    return _json.loads(outcome), dict(files)


def mode_grid(grid=None):
    """Lattice tables for a grid dict (defaults fill missing keys)."""
    return _core.mode_grid(_json.dumps(grid or {}))


def initial_data(grid=None, seed=20240917):
    """Seeded normalized initial data (u on nodes, alpha on field modes)."""
    return _core.initial_data(_json.dumps(grid or {}), seed)


def solve(u, alpha, T, grid=None, dt=1e-3, method="strang"):
    """Classical trajectory dict with arrays t, u, alpha."""
    return _core.solve(_json.dumps(grid or {}), u, alpha, T, dt, method)


def rate_fit(lambdas, errors):
    """(slope, intercept, rms residual) of log(error) against log(lambda)."""
    return _core.rate_fit(list(lambdas), list(errors))
