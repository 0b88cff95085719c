"""Python bindings for the mcsc reward-model and alignment core."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    InputError,
    IoError,
    McscError,
    TrainingError,
    UndefinedResultError,
    compute_advantages,
    dim_accuracy,
    dim_format_score,
    format_score_hcr,
    format_score_scdr,
    generate_corpus,
    hcr_reward,
    hier_format_score,
    motion_weights,
    preference_accuracy,
    scdr_reward,
)

__all__ = [
    "ConfigError",
    "InputError",
    "IoError",
    "McscError",
    "TrainingError",
    "UndefinedResultError",
    "align",
    "compute_advantages",
    "dim_accuracy",
    "dim_format_score",
    "evaluate",
    "format_score_hcr",
    "format_score_scdr",
    "gen_world",
    "generate_corpus",
    "hcr_reward",
    "hier_format_score",
    "motion_weights",
    "preference_accuracy",
    "scdr_reward",
    "train_hcr",
    "train_scdr",
]


def _command(fn):
    def run(out="", config=None, seed=None, overrides=None):
        """Run the pipeline stage and return its summary as a dict."""
        return _json.loads(fn(out, config, seed, {k: str(v) for k, v in (overrides or {}).items()}))

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


gen_world = _command(_core.gen_world)
train_scdr = _command(_core.train_scdr)
train_hcr = _command(_core.train_hcr)
align = _command(_core.align)
evaluate = _command(_core.evaluate)
