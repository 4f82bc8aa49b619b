# Tensor engine package
from src.engine.tensor import (
    AutodiffTape,
    Function,
    Parameter,
    Tensor,
    get_tape,
    is_grad_enabled,
    no_grad,
)
from src.engine.optim import Adam, AdamState, adam_step, clip_grad_norm
from src.engine.random import make_rng

__all__ = [
    "Adam",
    "AdamState",
    "AutodiffTape",
    "Function",
    "Parameter",
    "Tensor",
    "adam_step",
    "clip_grad_norm",
    "get_tape",
    "is_grad_enabled",
    "make_rng",
    "no_grad",
]
