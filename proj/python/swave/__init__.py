"""Finite element solver for semilinear stochastic wave equations."""

import json as _json

from ._swave import (
    ConfigError,
    EnsembleFailed,
    NewtonDiverged,
    __version__,
    brownian_increments,
    coarsen_increments,
    drift_problems,
    drift_values,
    preset_names,
    preset_config,
)
from . import _swave


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def validate_config(config):
    """List of problems in a config given as a dict or JSON text (empty when valid)."""
    return _swave.validate_config(_text(config))


def manifest_hash(config):
    return _swave.manifest_hash(_text(config))


def run_experiment(config, full_scale=False, write_files=False):
    """Run an experiment config and return its error tables or stability series as dicts.

    A dict such as {"preset": "test1a", "samples": 20} overrides the named preset.
    """
    return _swave.run_experiment(_text(config), full_scale, write_files)


def run_preset(name, **overrides):
    return run_experiment({"preset": name, **overrides})


def simulate(config, cells, tau, horizon, sample_index=0):
    """One trajectory of the config's problem; returns the per-node series and states."""
    return _swave.simulate(_text(config), cells, tau, horizon, sample_index)


__all__ = [
    "ConfigError",
    "EnsembleFailed",
    "NewtonDiverged",
    "brownian_increments",
    "coarsen_increments",
    "drift_problems",
    "drift_values",
    "manifest_hash",
    "preset_config",
    "preset_names",
    "run_experiment",
    "run_preset",
    "simulate",
    "validate_config",
]
