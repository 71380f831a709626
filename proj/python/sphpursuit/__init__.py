"""Learning matching pursuits for spherical downward continuation."""

import json as _json

from ._core import (
    Error,
    ParseError,
    add_noise,
    canonical_config,
    canonical_record,
    contrived_config,
    driscoll_healy_grid,
    element_class,
    evaluate,
    rel_data_error,
    rel_rmse,
    reuter_grid,
    sobolev_inner,
    synthesize,
    upward_eval,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config, base_dir="."):
    """Run an experiment; `config` is a JSON string or a dict."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _run_experiment(config, str(base_dir))


__all__ = [
    "Error",
    "ParseError",
    "add_noise",
    "canonical_config",
    "canonical_record",
    "contrived_config",
    "driscoll_healy_grid",
    "element_class",
    "evaluate",
    "rel_data_error",
    "rel_rmse",
    "reuter_grid",
    "run_experiment",
    "sobolev_inner",
    "synthesize",
    "upward_eval",
]
