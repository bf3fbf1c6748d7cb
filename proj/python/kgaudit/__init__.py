"""Audit toolkit for knowledge-graph recommenders.

Thin wrappers over the compiled core. Commands take the path of a
``key = value`` config file; keyword arguments override its settings.
"""

import json

from ._kgaudit import (
    Error,
    InvariantError,
    ParseError,
    UsageError,
    ValidationError,
    __version__,
    baseline,
    kruskal_h,
    normalized_entropy,
    preprocess,
    split,
    welch_ttest,
)
from . import _kgaudit

__all__ = [
    "Error",
    "InvariantError",
    "ParseError",
    "UsageError",
    "ValidationError",
    "baseline",
    "compare",
    "evaluate",
    "kruskal_h",
    "normalized_entropy",
    "preprocess",
    "run",
    "split",
    "stats",
    "welch_ttest",
]


def evaluate(config, out_dir=None, seed=None, workers=None):
    """Evaluate the configured methods and return the report as a dict."""
    return json.loads(_kgaudit.evaluate_json(config, out_dir, seed, workers))


def stats(config, out_dir=None):
    return json.loads(_kgaudit.stats_json(config, out_dir))


def compare(reports, grouping, out_dir, cutoff=None):
    """Two-class comparison of report files; ``grouping`` maps method -> class."""
    return json.loads(_kgaudit.compare_json([str(r) for r in reports], dict(grouping), cutoff, out_dir))


def run(config, out_dir=None, seed=None, workers=None):
    """Whole pipeline in one call; returns the evaluation report."""
    for step in (preprocess, split, baseline):
        step(config, out_dir, seed, workers)
    return evaluate(config, out_dir, seed, workers)
