"""Python bindings for the bislab core."""

import json

from . import _bislab
from ._bislab import (
    ConfigError,
    TrainingDiverged,
    alpha_at,
    bis_blend,
    class_count_profile,
    config_keys,
    confusion,
    draw_classes,
    keep_prob,
    make_synthetic,
    mean_probs,
    precision_recall,
    random_probs,
    render_config,
    reverse_probs,
    trend_stats,
    unlabeled_count_profile,
)

__all__ = [
    "ConfigError",
    "TrainingDiverged",
    "alpha_at",
    "bis_blend",
    "class_count_profile",
    "config_keys",
    "confusion",
    "draw_classes",
    "keep_prob",
    "make_synthetic",
    "mean_probs",
    "precision_recall",
    "random_probs",
    "render_config",
    "reverse_probs",
    "train",
    "trend_stats",
    "unlabeled_count_profile",
]


def train(stage="joint", config="", overrides=(), **settings):
    """Run one training stage and return (record, model).

    ``settings`` are extra ``section.key`` overrides written with a double
    underscore, e.g. ``train__epochs=2``.
    """
    extra = [f"{k.replace('__', '.', 1)}={v}" for k, v in settings.items()]
    out = _bislab.train(stage, config, list(overrides) + extra)
    return json.loads(out["record"]), out["model"]
