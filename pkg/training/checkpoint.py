"""Checkpoint blobs and the per-epoch history CSV."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from csv_utils import read_csv, write_csv
from model.regression_head import HeadParams
from model.weights_io import load_blob, save_blob
from .trainer import EpochRecord

logger = logging.getLogger(__name__)

HISTORY_FIELDS = ["epoch", "train_mse", "val_rmse", "val_plcc", "val_srcc"]


def save_checkpoint(path: Union[str, Path], params: HeadParams, meta: Dict[str, Any]):
    """Head weights (float64) plus a JSON header with hash, epoch, metrics and configs."""
    header = {"kind": "checkpoint", "dropout_p": params.dropout_p}
    header.update(meta)
    save_blob(path, params.arrays(), header)
    logger.info(f"Saved checkpoint to {path}")


def load_checkpoint(path: Union[str, Path]) -> Tuple[HeadParams, Dict[str, Any]]:
    """Read head params and metadata from a checkpoint."""
    meta, arrays = load_blob(path)
    if meta.get("kind") != "checkpoint":
        raise ValueError(f"{path} is not a training checkpoint")
    return HeadParams.from_arrays(arrays, meta.get("dropout_p", 0.1)), meta


def write_history(path: Union[str, Path], history: List[EpochRecord], preamble: str = ""):
    """Write per-epoch metrics as CSV."""
    write_csv(path, HISTORY_FIELDS, [record.as_row() for record in history], preamble=preamble)


def read_history(path: Union[str, Path]) -> List[EpochRecord]:
    """Read a history CSV back into epoch records."""
    _, rows = read_csv(path)
    return [
        EpochRecord(
            epoch=int(row["epoch"]),
            train_mse=float(row["train_mse"]),
            val_rmse=float(row["val_rmse"]),
            val_plcc=float(row["val_plcc"]),
            val_srcc=float(row["val_srcc"]),
        )
        for row in rows
    ]
