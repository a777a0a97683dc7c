"""Generalized Kalman filter over changing bases (C++ core)."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import (
    ConfigError,
    _config_hash,
    _default_config,
    _resolve_config,
    _run_experiment,
    _verify,
)


def default_config():
    """Default experiment configuration as a dict."""
    return _json.loads(_default_config())


def resolve_config(config=None):
    """Validate `config` against the defaults and return the full config."""
    return _json.loads(_resolve_config(_json.dumps(config or {})))


def config_hash(config=None):
    return _config_hash(_json.dumps(config or {}))


def run_experiment(config=None, out_dir=None):
    """Run the sensor sequence. Returns (summary dict, final KnowledgeRep)."""
    summary, kr = _run_experiment(_json.dumps(config or {}), None if out_dir is None else str(out_dir))
    return _json.loads(summary), kr


def verify(config=None, inject_asymmetry=False):
    return _json.loads(_verify(_json.dumps(config or {}), inject_asymmetry))
