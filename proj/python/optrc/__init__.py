"""Optical reservoir computing simulator (Python bindings)."""

import json as _json

from ._optrc import (
    ConfigError,
    IoError,
    NumericalError,
    OptrcError,
    distance_matrix,
    distinct_code_count,
    encode,
    fit_ridge,
    lyapunov_estimate,
    mackey_glass,
    reservoir_states,
    speckle,
)
from ._optrc import resolve_config as _resolve_config
from ._optrc import run_experiment as _run_experiment


def resolve_config(config=None, preset=""):
    """Return the fully resolved experiment config as a dict."""
    return _json.loads(_resolve_config(_json.dumps(config or {}), preset))


def run_experiment(config=None, preset=""):
    """Run an experiment described by a config dict; returns the NMSE curve."""
    return _run_experiment(_json.dumps(config or {}), preset)


__all__ = [
    "ConfigError",
    "IoError",
    "NumericalError",
    "OptrcError",
    "distance_matrix",
    "distinct_code_count",
    "encode",
    "fit_ridge",
    "lyapunov_estimate",
    "mackey_glass",
    "reservoir_states",
    "resolve_config",
    "run_experiment",
    "speckle",
]
