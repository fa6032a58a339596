"""Frozen, seeded stand-in for the vision encoder + decoder stack.

The stand-in keeps the interface of the real model: visual tokens are
projected into the decoder width, text ids are embedded, the two are
concatenated as ``[visual; text]`` and passed through ``n_mix_layers``
token-wise blocks ``h <- h + tanh(h W + b)``. Padding positions come out as
exact zero vectors.

Weights are drawn from :class:`SplitMix64` in a fixed order:
``visual_proj`` (U±1/sqrt(visual_dim)), ``embed`` (U±1/sqrt(d_model)), then
per layer ``mix_<k>_weight`` and ``mix_<k>_bias`` (U±1/sqrt(d_model)).
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from preprocessing.image_processor import VisualTokens
from preprocessing.text_processor import BatchedTokens, VOCAB_SIZE
from .seeded_rng import SplitMix64
from .weights_io import load_blob, save_blob

logger = logging.getLogger(__name__)


class BackboneConfig(BaseModel):
    d_model: int = Field(default=576, ge=2)
    n_mix_layers: int = Field(default=2, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    vocab_size: int = Field(default=VOCAB_SIZE, ge=VOCAB_SIZE)
    visual_dim: int = Field(default=6912, ge=1)

    @field_validator("d_model")
    @classmethod
    def _even_width(cls, value):
        if value % 2:
            raise ValueError("d_model must be even")
        return value


@dataclass
class HiddenStates:
    """Final hidden states (T×d, or B×T×d for a batch) and the matching mask."""
    values: np.ndarray
    mask: np.ndarray

    @property
    def length(self) -> int:
        return self.values.shape[-2]

    @property
    def dim(self) -> int:
        return self.values.shape[-1]


class ToyBackbone:
    """Immutable after construction; every weight array is read-only."""

    def __init__(self, config: BackboneConfig, weights: Dict[str, np.ndarray]):
        self.config = config
        self.weights = {}
        for name, array in weights.items():
            frozen = np.array(array, dtype=np.float32)
            frozen.flags.writeable = False
            self.weights[name] = frozen
        self._check_shapes()

    def _check_shapes(self):
        cfg = self.config
        expected = {
            "visual_proj": (cfg.visual_dim, cfg.d_model),
            "embed": (cfg.vocab_size, cfg.d_model),
        }
        for layer in range(cfg.n_mix_layers):
            expected[f"mix_{layer}_weight"] = (cfg.d_model, cfg.d_model)
            expected[f"mix_{layer}_bias"] = (cfg.d_model,)
        if set(expected) != set(self.weights):
            raise ValueError("backbone weights do not match the configuration")
        for name, shape in expected.items():
            if self.weights[name].shape != shape:
                raise ValueError(f"dimension mismatch for {name}: {self.weights[name].shape} != {shape}")

    def encode_batch(self, visual: np.ndarray, text: BatchedTokens) -> HiddenStates:
        """Encode ``visual`` (B×V×visual_dim) together with ``text`` (B×T_text)."""
        cfg = self.config
        batch, n_visual, visual_dim = visual.shape
        text_len = text.ids.shape[1]
        if n_visual + text_len == 0:
            raise ValueError("empty sequence")
        if text.ids.shape[0] != batch:
            raise ValueError(f"batch mismatch: {batch} images vs {text.ids.shape[0]} token rows")
        if n_visual and visual_dim != cfg.visual_dim:
            raise ValueError(f"dimension mismatch: visual dim {visual_dim}, backbone expects {cfg.visual_dim}")
        if text.ids.size and (text.ids.min() < 0 or text.ids.max() >= cfg.vocab_size):
            raise ValueError("token id out of range")

        if n_visual:
            projected = visual.astype(np.float32) @ self.weights["visual_proj"]
        else:
            projected = np.zeros((batch, 0, cfg.d_model), dtype=np.float32)
        embedded = self.weights["embed"][text.ids]
        hidden = np.concatenate([projected, embedded], axis=1)
        mask = np.concatenate(
            [np.ones((batch, n_visual), dtype=np.int64), text.mask.astype(np.int64)], axis=1
        )
        for layer in range(cfg.n_mix_layers):
            weight = self.weights[f"mix_{layer}_weight"]
            bias = self.weights[f"mix_{layer}_bias"]
            hidden = hidden + np.tanh(hidden @ weight + bias)
        hidden = hidden * mask[..., None].astype(np.float32)
        return HiddenStates(values=hidden, mask=mask)

    def encode(self, visual: VisualTokens, text: BatchedTokens) -> HiddenStates:
        """Single-sample variant of :meth:`encode_batch`."""
        if text.ids.shape[0] != 1:
            raise ValueError("encode expects a single token row")
        states = self.encode_batch(visual.data[None, ...], text)
        return HiddenStates(values=states.values[0], mask=states.mask[0])

    def _blob_meta(self) -> Dict:
        return {"kind": "backbone", "config": self.config.model_dump()}

    def save(self, path: Union[str, Path]):
        """Write the weights as a single blob."""
        save_blob(path, self.weights, self._blob_meta())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ToyBackbone":
        """Read a backbone written by :meth:`save`."""
        meta, arrays = load_blob(path)
        if meta.get("kind") != "backbone":
            raise ValueError(f"{path} does not hold backbone weights")
        return cls(BackboneConfig(**meta["config"]), arrays)


def init_backbone(cfg: BackboneConfig) -> ToyBackbone:
    """Draw all backbone weights from the seeded stream."""
    rng = SplitMix64(cfg.seed)
    d = cfg.d_model
    weights: Dict[str, np.ndarray] = {}
    bound = 1.0 / math.sqrt(cfg.visual_dim)
    weights["visual_proj"] = rng.uniform(-bound, bound, (cfg.visual_dim, d))
    bound = 1.0 / math.sqrt(d)
    weights["embed"] = rng.uniform(-bound, bound, (cfg.vocab_size, d))
    for layer in range(cfg.n_mix_layers):
        weights[f"mix_{layer}_weight"] = rng.uniform(-bound, bound, (d, d))
        weights[f"mix_{layer}_bias"] = rng.uniform(-bound, bound, (d,))
    logger.info(f"Initialized backbone d_model={d} layers={cfg.n_mix_layers} seed={cfg.seed}")
    return ToyBackbone(cfg, weights)
