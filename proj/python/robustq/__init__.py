"""Robust asynchronous Q-learning under Huber reward corruption.

Thin wrappers over the compiled ``_core`` module. MDPs and experiment
configs are plain dicts using the same JSON schemas as the command-line tool.
"""

import json as _json

from . import _core
from ._core import (
    AssumptionViolated,
    InsufficientData,
    IoError,
    NumericFailure,
    agnostic_delta1,
    block_parameter,
    burn_in,
    known_delta1,
    median,
    trim,
    trim_sc,
)

__all__ = [
    "AssumptionViolated",
    "InsufficientData",
    "IoError",
    "NumericFailure",
    "agnostic_delta1",
    "analyze",
    "block_parameter",
    "burn_in",
    "experiment_csv",
    "grid_world",
    "known_delta1",
    "lower_bound",
    "median",
    "q_star",
    "run_experiment",
    "trim",
    "trim_sc",
]


def grid_world(seed=0, noise_variance=1.0, slip=0.1, gamma=0.5):
    """5x5 grid-world MDP document (with its uniform behavior policy)."""
    return _json.loads(_core.grid_world_json(seed, noise_variance, slip, gamma))


def q_star(mdp, tol=1e-10):
    """Q* as a list of rows, one per state."""
    return _core.q_star(_json.dumps(mdp), tol)


def analyze(mdp):
    """Stationary law, visitation map, lambda_min and mixing time."""
    return _json.loads(_core.analyze_json(_json.dumps(mdp)))


def lower_bound(sigma_bar=1.0, epsilon="0.04", gamma=0.5):
    """Two-MDP lower-bound instance; epsilon may be '1/25' style text."""
    return _json.loads(_core.lower_bound_json(sigma_bar, str(epsilon), gamma))


def run_experiment(config):
    """Runs a multi-seed experiment and returns the aggregate as a dict."""
    return _json.loads(_core.run_experiment_json(_json.dumps(config)))


def experiment_csv(config):
    """Aggregate CSV text for an experiment config."""
    return _core.aggregate_csv_from_config(_json.dumps(config))
