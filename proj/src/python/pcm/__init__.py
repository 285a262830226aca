"""Parameterized convex minorant models (EPLSE and baselines)."""

from ._pcm import (
    LseNet,
    Model,
    __version__,
    case1_objective,
    init_model,
    load_model,
    logsumexp,
    lower_convex_envelope,
    run_experiment,
    wingrock,
)

__all__ = [
    "LseNet",
    "Model",
    "case1_objective",
    "init_model",
    "load_model",
    "logsumexp",
    "lower_convex_envelope",
    "run_experiment",
    "wingrock",
]
