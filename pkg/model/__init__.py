"""Frozen toy backbone, seeded generator and the trainable regression head."""

from .seeded_rng import SplitMix64, derive_seed
from .backbone import BackboneConfig, HiddenStates, ToyBackbone, init_backbone
from .regression_head import (
    HeadParams,
    HeadGradients,
    Prediction,
    init_head,
    masked_mean_pool,
    head_forward,
    head_backward,
    head_backward_batch,
    predict_batch,
    scaled_sigmoid,
)

__all__ = [
    "SplitMix64",
    "derive_seed",
    "BackboneConfig",
    "HiddenStates",
    "ToyBackbone",
    "init_backbone",
    "HeadParams",
    "HeadGradients",
    "Prediction",
    "init_head",
    "masked_mean_pool",
    "head_forward",
    "head_backward",
    "head_backward_batch",
    "predict_batch",
    "scaled_sigmoid",
]
