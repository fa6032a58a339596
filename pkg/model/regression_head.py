"""Regression head: mask-aware mean pooling, two-layer MLP, scaled sigmoid.

    h_pool = sum_i m_i h_i / sum_i m_i
    x      = W2^T relu(W1^T h_pool + b1) + b2
    y_hat  = 1 + 4 sigmoid(x)

The head is the only trainable state. All arithmetic runs in float64 so the
analytic gradients can be checked tightly against finite differences.
In float64 the bound saturates to exactly 1 or 5 only for |x| > ~36.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from scipy.special import expit

from .backbone import HiddenStates
from .seeded_rng import SplitMix64
from .weights_io import load_blob, save_blob

RATING_MIN = 1.0
RATING_SPAN = 4.0


@dataclass
class HeadParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    dropout_p: float = 0.1

    def __post_init__(self):
        d, hidden = self.W1.shape
        if self.b1.shape != (hidden,) or self.W2.shape != (hidden, 1) or self.b2.shape != (1,):
            raise ValueError("head parameter shapes are inconsistent")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")

    @property
    def d_model(self) -> int:
        return self.W1.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        """Named arrays in a fixed order."""
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def copy(self) -> "HeadParams":
        """Deep copy of the parameters."""
        return HeadParams(
            W1=self.W1.copy(), b1=self.b1.copy(), W2=self.W2.copy(), b2=self.b2.copy(),
            dropout_p=self.dropout_p,
        )

    def is_finite(self) -> bool:
        """True when no parameter is NaN or infinite."""
        return all(np.all(np.isfinite(array)) for array in self.arrays().values())

    def save(self, path: Union[str, Path], meta: Optional[Dict] = None):
        """Write the head as a weight blob."""
        header = {"kind": "head", "dropout_p": self.dropout_p}
        header.update(meta or {})
        save_blob(path, self.arrays(), header)

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray], dropout_p: float) -> "HeadParams":
        return cls(
            W1=arrays["W1"].astype(np.float64), b1=arrays["b1"].astype(np.float64),
            W2=arrays["W2"].astype(np.float64), b2=arrays["b2"].astype(np.float64),
            dropout_p=dropout_p,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "HeadParams":
        """Read a head written by :meth:`save`."""
        meta, arrays = load_blob(path)
        return cls.from_arrays(arrays, meta.get("dropout_p", 0.1))


@dataclass
class Prediction:
    logit_x: float
    rating_yhat: float


@dataclass
class HeadGradients:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    h_pool: Optional[np.ndarray] = None

    def arrays(self) -> Dict[str, np.ndarray]:
        """Named arrays in a fixed order."""
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}


def init_head(d_model: int, rng: Optional[SplitMix64] = None, dropout_p: float = 0.1,
              zero: bool = False) -> HeadParams:
    """Linear-layer style init, U(±1/sqrt(fan_in)); ``zero`` gives all-zero params."""
    hidden = d_model // 2
    if zero or rng is None:
        return HeadParams(
            W1=np.zeros((d_model, hidden)), b1=np.zeros(hidden),
            W2=np.zeros((hidden, 1)), b2=np.zeros(1), dropout_p=dropout_p,
        )
    bound1 = 1.0 / math.sqrt(d_model)
    bound2 = 1.0 / math.sqrt(hidden)
    return HeadParams(
        W1=rng.uniform(-bound1, bound1, (d_model, hidden)),
        b1=rng.uniform(-bound1, bound1, (hidden,)),
        W2=rng.uniform(-bound2, bound2, (hidden, 1)),
        b2=rng.uniform(-bound2, bound2, (1,)),
        dropout_p=dropout_p,
    )


def scaled_sigmoid(x):
    """Map logits onto the open rating interval (1, 5)."""
    return RATING_MIN + RATING_SPAN * expit(x)


def masked_mean_pool(states: HiddenStates) -> np.ndarray:
    """Mask-weighted mean over the sequence axis (works for T×d and B×T×d)."""
    values = np.asarray(states.values, dtype=np.float64)
    mask = np.asarray(states.mask, dtype=np.float64)
    counts = mask.sum(axis=-1)
    if np.any(counts == 0):
        raise ValueError("no valid tokens")
    summed = np.einsum("...t,...td->...d", mask, values)
    return summed / counts[..., None]


def make_dropout_mask(rng: SplitMix64, shape, p: float) -> np.ndarray:
    """Binary keep-mask; a unit is dropped with probability ``p``."""
    if p <= 0.0:
        return np.ones(shape)
    return (rng.random(int(np.prod(shape))).reshape(shape) >= p).astype(np.float64)


def _forward(h_pool: np.ndarray, params: HeadParams, dropout_mask: Optional[np.ndarray]):
    z1 = h_pool @ params.W1 + params.b1
    active = np.maximum(z1, 0.0)
    if dropout_mask is not None:
        active = active * dropout_mask / (1.0 - params.dropout_p)
    x = active @ params.W2[:, 0] + params.b2[0]
    return z1, active, x


def predict_batch(h_pool: np.ndarray, params: HeadParams,
                  dropout_mask: Optional[np.ndarray] = None):
    """Vectorized forward over B×d pooled features; returns (logits, ratings)."""
    h_pool = np.asarray(h_pool, dtype=np.float64)
    if h_pool.shape[-1] != params.d_model:
        raise ValueError(f"pooled dim {h_pool.shape[-1]} does not match head width {params.d_model}")
    if not np.all(np.isfinite(h_pool)):
        raise ValueError("non-finite activation")
    _, _, x = _forward(h_pool, params, dropout_mask)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite activation")
    return x, scaled_sigmoid(x)


def head_forward(h_pool: np.ndarray, params: HeadParams, mode: str = "eval",
                 rng: Optional[SplitMix64] = None) -> Prediction:
    """Single-sample forward; inverted dropout on the ReLU layer in train mode."""
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode '{mode}'")
    dropout_mask = None
    if mode == "train" and params.dropout_p > 0.0:
        if rng is None:
            raise ValueError("train mode needs an rng for the dropout mask")
        dropout_mask = make_dropout_mask(rng, (params.W1.shape[1],), params.dropout_p)
    x, y_hat = predict_batch(np.asarray(h_pool)[None, :], params, dropout_mask)
    return Prediction(logit_x=float(x[0]), rating_yhat=float(y_hat[0]))


def head_backward_batch(h_pool: np.ndarray, params: HeadParams, targets: np.ndarray,
                        dropout_mask: Optional[np.ndarray] = None) -> HeadGradients:
    """Gradients of the batch-mean squared error (1/B) sum (y_hat - y)^2."""
    h_pool = np.asarray(h_pool, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    batch = h_pool.shape[0]
    z1, active, x = _forward(h_pool, params, dropout_mask)
    sig = expit(x)
    y_hat = RATING_MIN + RATING_SPAN * sig
    # dL/dx = 2 (y_hat - y) * 4 sigma (1 - sigma), averaged over the batch
    grad_x = 2.0 * (y_hat - targets) * RATING_SPAN * sig * (1.0 - sig) / batch

    grad_W2 = (active.T @ grad_x)[:, None]
    grad_b2 = np.array([grad_x.sum()])
    grad_active = grad_x[:, None] * params.W2[:, 0][None, :]
    if dropout_mask is not None:
        grad_active = grad_active * dropout_mask / (1.0 - params.dropout_p)
    grad_z1 = grad_active * (z1 > 0.0)
    grad_W1 = h_pool.T @ grad_z1
    grad_b1 = grad_z1.sum(axis=0)
    grad_h = grad_z1 @ params.W1.T
    return HeadGradients(W1=grad_W1, b1=grad_b1, W2=grad_W2, b2=grad_b2, h_pool=grad_h)


def head_backward(h_pool: np.ndarray, params: HeadParams, target: float,
                  dropout_mask: Optional[np.ndarray] = None) -> HeadGradients:
    """Exact gradients of the per-sample loss (y_hat - y)^2.

    ``dropout_mask`` must be the mask used by the paired forward pass
    (``None`` for eval mode).
    """
    mask = None if dropout_mask is None else np.asarray(dropout_mask, dtype=np.float64)[None, :]
    grads = head_backward_batch(np.asarray(h_pool)[None, :], params, np.array([target]), mask)
    grads.h_pool = grads.h_pool[0]
    return grads
