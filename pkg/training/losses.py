"""Regression loss."""

from typing import Sequence

import numpy as np

from evaluation.metrics import squared_errors


def mse_loss(preds: Sequence[float], targets: Sequence[float]) -> float:
    """(1/N) sum (pred - target)^2."""
    return float(np.mean(squared_errors(preds, targets)))
