"""Python access to the Lookaround analysis library and experiment runner."""

import json

from ._core import (
    DomainError,
    NumericalError,
    fixed_point,
    iterate_to_stationarity,
    make_dataset,
    materialize_config,
    method_rate,
    optimal_rate,
    ordering_holds,
    rate_sweep,
    uniform_mean,
)
from ._core import run_experiment as _run_experiment

__all__ = [
    "DomainError",
    "NumericalError",
    "fixed_point",
    "iterate_to_stationarity",
    "make_dataset",
    "materialize_config",
    "method_rate",
    "optimal_rate",
    "ordering_holds",
    "rate_sweep",
    "run_experiment",
    "uniform_mean",
]


def run_experiment(config, out_dir):
    """Run an experiment from a config dict or JSON string, writing artifacts to out_dir."""
    text = config if isinstance(config, str) else json.dumps(config)
    return _run_experiment(text, str(out_dir))
