"""Head training: loss, schedule, optimizer, loop and checkpoints."""

from .losses import mse_loss
from .optimizer import OptimizerState, lr_at, optimizer_step
from .trainer import (
    TrainConfig,
    EpochRecord,
    TrainResult,
    EarlyStopping,
    FeatureExtractor,
    RatingModel,
    train,
)
from .checkpoint import save_checkpoint, load_checkpoint, write_history, read_history

__all__ = [
    "mse_loss",
    "OptimizerState",
    "lr_at",
    "optimizer_step",
    "TrainConfig",
    "EpochRecord",
    "TrainResult",
    "EarlyStopping",
    "FeatureExtractor",
    "RatingModel",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "write_history",
    "read_history",
]
