"""Instrumented parallel mortar kernels on simulated ranks."""

import json

from ._core import (
    ConfigError,
    Error,
    clip_polygons,
    imbalance_ratio,
    metrics_csv,
    rcb_partition,
    should_rebalance,
    slave_counts,
    triangle_rule,
)
from ._core import run as _run

__all__ = [
    "ConfigError",
    "Error",
    "clip_polygons",
    "imbalance_ratio",
    "metrics_csv",
    "rcb_partition",
    "run",
    "should_rebalance",
    "slave_counts",
    "triangle_rule",
]


def run(config, out_dir=""):
    """Run a configuration given as a dict or a JSON string."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _run(config, out_dir)
