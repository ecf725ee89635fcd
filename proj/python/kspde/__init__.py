"""Stochastic conservation law laboratory.

Thin convenience layer over the compiled core: configs travel as JSON
strings at the boundary, plain dicts on the Python side.
"""

import json

from kspde._core import (
    ConfigError,
    config_hash,
    default_config,
    list_experiments,
    run_experiment,
    solve,
)

__all__ = [
    "ConfigError",
    "config",
    "config_hash",
    "default_config",
    "list_experiments",
    "run",
    "run_experiment",
    "solve",
]


def config(experiment, **overrides):
    """Default config of an experiment as a dict, with overrides applied."""
    base = json.loads(default_config(experiment))
    for key, value in overrides.items():
        if key not in base:
            raise ConfigError(f"unknown config key: {key}")
        base[key] = value
    return base


def run(experiment, **overrides):
    """Run a canned experiment with keyword overrides; returns the record."""
    return run_experiment(json.dumps(config(experiment, **overrides)))
