"""Python bindings for the robustlab training and verification library."""

import json as _json

from ._core import (  # noqa: F401
    ConfigError,
    ContractViolation,
    DivergenceError,
    Mlp,
    accuracy,
    coordinate_median,
    corollary1_bound,
    corrupt,
    drop_count,
    drop_schedule,
    filtered_mean_full,
    init_mlp,
    lemma1_bound,
    lemma2_condition,
    loss,
    pl_counterexample,
    r_square,
    select_by_norm,
    theorem2_bound,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config):
    """Runs an experiment from a config dict or JSON string; returns one dict per run."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _run_experiment(config)
