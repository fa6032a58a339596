"""Warmup + linear-decay schedule and a full-precision AdamW update.

Only the weight matrices (``W1``, ``W2``) receive decoupled weight decay;
biases are updated by the adaptive moments alone.
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from model.regression_head import HeadGradients, HeadParams

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8
DECAYED = ("W1", "W2")


def warmup_steps(total_steps: int, warmup_frac: float) -> int:
    """Number of warmup steps for a run of ``total_steps``."""
    return max(1, math.ceil(warmup_frac * total_steps))


def lr_at(step: int, total_steps: int, cfg) -> float:
    """Learning rate at ``step`` (0-based) for a run of ``total_steps`` updates."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    warmup = warmup_steps(total_steps, cfg.warmup_frac)
    if step < warmup:
        return cfg.peak_lr * (step + 1) / warmup
    if total_steps == warmup:
        return 0.0
    return max(0.0, cfg.peak_lr * (total_steps - step) / (total_steps - warmup))


@dataclass
class OptimizerState:
    first_moment: Dict[str, np.ndarray]
    second_moment: Dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: HeadParams) -> "OptimizerState":
        """Zeroed moment buffers shaped like ``params``."""
        arrays = params.arrays()
        return cls(
            first_moment={name: np.zeros_like(value) for name, value in arrays.items()},
            second_moment={name: np.zeros_like(value) for name, value in arrays.items()},
        )


def optimizer_step(params: HeadParams, grads: HeadGradients, state: OptimizerState,
                   lr: float, cfg) -> HeadParams:
    """One AdamW update in place on ``params`` and ``state``; returns ``params``."""
    grad_arrays = grads.arrays()
    for name, grad in grad_arrays.items():
        if grad.shape != state.first_moment[name].shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        if not np.all(np.isfinite(grad)):
            raise ValueError("diverged")

    state.step += 1
    correction1 = 1.0 - BETA1 ** state.step
    correction2 = 1.0 - BETA2 ** state.step
    for name, param in params.arrays().items():
        grad = grad_arrays[name]
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= BETA1
        m += (1.0 - BETA1) * grad
        v *= BETA2
        v += (1.0 - BETA2) * grad * grad
        if name in DECAYED and cfg.weight_decay:
            param *= 1.0 - lr * cfg.weight_decay
        param -= lr * (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
    if not params.is_finite():
        raise ValueError("diverged")
    return params
