"""MSE training of the regression head on top of the frozen backbone.

The backbone never changes during training, so pooled features are
extracted once per sample and reused across epochs. Only the head is
optimized. Validation PLCC drives checkpoint selection and early stopping.
"""

import hashlib
import logging
import math
from dataclasses import astuple, dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from dataset.samples import RatingSample
from evaluation.metrics import plcc, rmse, srcc
from model.backbone import HiddenStates, ToyBackbone
from model.regression_head import (
    HeadParams,
    head_backward_batch,
    init_head,
    make_dropout_mask,
    masked_mean_pool,
    predict_batch,
)
from model.seeded_rng import SplitMix64, derive_seed
from preprocessing.image_io import load_images
from preprocessing.image_processor import ImageConfig, ImageTensor, image_to_visual_tokens
from preprocessing.text_processor import PromptConfig, build_prompt, pad_batch, tokenize
from .optimizer import OptimizerState, lr_at, optimizer_step

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    peak_lr: float = Field(default=4e-4, gt=0)
    warmup_frac: float = Field(default=0.03, gt=0, lt=1)
    batch_size: int = Field(default=64, ge=1)
    max_epochs: int = Field(default=5, ge=0)
    patience: int = Field(default=1, ge=1)
    weight_decay: float = Field(default=0.01, ge=0)
    dropout_p: float = Field(default=0.1, ge=0, lt=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_rmse: float
    val_plcc: float
    val_srcc: float

    def as_row(self) -> Dict:
        return {
            "epoch": self.epoch,
            "train_mse": self.train_mse,
            "val_rmse": self.val_rmse,
            "val_plcc": self.val_plcc,
            "val_srcc": self.val_srcc,
        }


@dataclass
class TrainResult:
    params: HeadParams
    history: List[EpochRecord]
    best_epoch: int

    @property
    def best_record(self) -> EpochRecord:
        """History entry of the best epoch."""
        return self.history[self.best_epoch - 1]


class EarlyStopping:
    """Tracks the best score; an undefined (NaN) score never counts as an improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score = -math.inf
        self.best_epoch: Optional[int] = None
        self.stale_epochs = 0

    def update(self, score: float, epoch: int) -> bool:
        """Record an epoch; returns True when it is the new best."""
        value = -math.inf if math.isnan(score) else score
        if self.best_epoch is None or value > self.best_score:
            self.best_score = value
            self.best_epoch = epoch
            self.stale_epochs = 0
            return True
        self.stale_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale_epochs >= self.patience


def cache_key(sample: RatingSample) -> Tuple[Hashable, ...]:
    """Identity of a sample's model input: id, text fields and image (path or pixel digest)."""
    image = sample.image
    if isinstance(image, ImageTensor):
        pixels = np.ascontiguousarray(image.data)
        image = (pixels.shape, hashlib.sha256(pixels.tobytes()).hexdigest())
    return (sample.sample_id, image) + astuple(sample.fields)


class FeatureExtractor:
    """Preprocess, encode and pool samples with the frozen backbone.

    Results are memoized by sample content (id, text fields and image), so
    two samples that share an id never share a feature row. Samples are
    always processed in the order given, in chunks of ``batch_size``.
    """

    def __init__(self, backbone: ToyBackbone, prompt_cfg: PromptConfig, image_cfg: ImageConfig,
                 batch_size: int = 32, workers: int = 1, fixed_length: bool = False):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.backbone = backbone
        self.prompt_cfg = prompt_cfg
        self.image_cfg = image_cfg
        self.batch_size = batch_size
        self.workers = workers
        self.fixed_length = fixed_length
        self._cache: Dict[Tuple[Hashable, ...], np.ndarray] = {}

    def _images(self, samples: Sequence[RatingSample]) -> List[ImageTensor]:
        paths = [sample.image for sample in samples if not isinstance(sample.image, ImageTensor)]
        loaded = iter(load_images(paths, self.workers)) if paths else iter(())
        return [
            sample.image if isinstance(sample.image, ImageTensor) else next(loaded)
            for sample in samples
        ]

    def encode(self, samples: Sequence[RatingSample]) -> HiddenStates:
        """Final hidden states for one batch of samples."""
        images = self._images(samples)
        visual = np.stack([image_to_visual_tokens(image, self.image_cfg).data for image in images])
        tokens = [tokenize(build_prompt(sample.fields, self.prompt_cfg), self.prompt_cfg) for sample in samples]
        pad_to = self.prompt_cfg.max_text_tokens if self.fixed_length else None
        return self.backbone.encode_batch(visual, pad_batch(tokens, pad_to=pad_to))

    def pooled(self, samples: Sequence[RatingSample]) -> np.ndarray:
        """N×d mask-pooled features, in the order of ``samples``."""
        keys = [cache_key(sample) for sample in samples]
        pending = [(key, sample) for key, sample in zip(keys, samples) if key not in self._cache]
        for start in range(0, len(pending), self.batch_size):
            chunk = pending[start:start + self.batch_size]
            features = masked_mean_pool(self.encode([sample for _, sample in chunk]))
            for (key, _), row in zip(chunk, features):
                self._cache[key] = row
        if not samples:
            return np.zeros((0, self.backbone.config.d_model))
        return np.stack([self._cache[key] for key in keys])


@dataclass
class RatingModel:
    """Frozen feature extractor plus trained head."""
    extractor: FeatureExtractor
    head: HeadParams

    def predict(self, samples: Sequence[RatingSample]) -> np.ndarray:
        """Ratings for the given samples."""
        _, ratings = predict_batch(self.extractor.pooled(samples), self.head)
        return ratings


def _targets(samples: Sequence[RatingSample]) -> np.ndarray:
    return np.array([sample.target for sample in samples], dtype=np.float64)


def _correlation(metric, preds: np.ndarray, targets: np.ndarray, epoch: int) -> float:
    try:
        return metric(preds, targets)
    except ValueError as e:
        logger.warning(f"Epoch {epoch}: validation {metric.__name__} undefined ({e})")
        return math.nan


def validate(params: HeadParams, features: np.ndarray, targets: np.ndarray, epoch: int):
    """RMSE, PLCC and SRCC of the head on precomputed features."""
    _, preds = predict_batch(features, params)
    return (
        rmse(preds, targets),
        _correlation(plcc, preds, targets, epoch),
        _correlation(srcc, preds, targets, epoch),
    )


def train(train_set: Sequence[RatingSample], val_set: Sequence[RatingSample],
          extractor: FeatureExtractor, cfg: TrainConfig,
          initial_head: Optional[HeadParams] = None) -> TrainResult:
    """Fit the head; returns the params of the best validation-PLCC epoch."""
    if not train_set:
        raise ValueError("empty training set")
    if not val_set:
        raise ValueError("empty validation set")
    if cfg.max_epochs == 0:
        raise ValueError("nothing to train")
    val_targets = _targets(val_set)
    if np.all(val_targets == val_targets[0]):
        raise ValueError("degenerate validation set")

    d_model = extractor.backbone.config.d_model
    if initial_head is None:
        params = init_head(d_model, SplitMix64(derive_seed(cfg.seed, "head_init")), cfg.dropout_p)
    else:
        params = initial_head.copy()
    params.dropout_p = cfg.dropout_p
    shuffle_rng = SplitMix64(derive_seed(cfg.seed, "shuffle"))
    dropout_rng = SplitMix64(derive_seed(cfg.seed, "dropout"))

    logger.info(f"Extracting features for {len(train_set)} train / {len(val_set)} validation samples")
    train_features = extractor.pooled(train_set)
    val_features = extractor.pooled(val_set)
    train_targets = _targets(train_set)

    n = len(train_set)
    steps_per_epoch = math.ceil(n / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.max_epochs
    state = OptimizerState.zeros_like(params)
    stopper = EarlyStopping(cfg.patience)
    history: List[EpochRecord] = []
    best_params = params.copy()
    step = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_errors = []
        for start in range(0, n, cfg.batch_size):
            index = order[start:start + cfg.batch_size]
            features = train_features[index]
            targets = train_targets[index]
            mask = None
            if params.dropout_p > 0.0:
                mask = make_dropout_mask(dropout_rng, (len(index), params.W1.shape[1]), params.dropout_p)
            _, preds = predict_batch(features, params, mask)
            epoch_errors.append((preds - targets) ** 2)
            grads = head_backward_batch(features, params, targets, mask)
            optimizer_step(params, grads, state, lr_at(step, total_steps, cfg), cfg)
            step += 1

        train_mse = float(np.mean(np.concatenate(epoch_errors)))
        val_rmse, val_plcc, val_srcc = validate(params, val_features, val_targets, epoch)
        history.append(EpochRecord(epoch, train_mse, val_rmse, val_plcc, val_srcc))
        logger.info(
            f"Epoch {epoch}: train_mse={train_mse:.6f} val_rmse={val_rmse:.6f} "
            f"val_plcc={val_plcc:.6f} val_srcc={val_srcc:.6f}"
        )
        if stopper.update(val_plcc, epoch):
            best_params = params.copy()
        if train_mse == 0.0:
            logger.info(f"Training loss reached zero at epoch {epoch}; stopping")
            break
        if stopper.should_stop:
            logger.info(f"No PLCC improvement for {cfg.patience} epoch(s); stopping at epoch {epoch}")
            break

    logger.info(f"Best epoch {stopper.best_epoch} with val_plcc={history[stopper.best_epoch - 1].val_plcc:.6f}")
    return TrainResult(params=best_params, history=history, best_epoch=stopper.best_epoch)

