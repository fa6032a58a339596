"""``train``: fit the regression head on a prepared dataset."""

import argparse
import hashlib
import logging
from pathlib import Path

from config import config_hash, preamble
from dataset.samples import load_rating_samples
from model.backbone import init_backbone
from training.checkpoint import save_checkpoint, write_history
from training.trainer import FeatureExtractor, train
from .base_command import BaseCommand, CommandResult

logger = logging.getLogger(__name__)


def weights_digest(backbone) -> str:
    """SHA-256 over the backbone weight arrays, used to prove they stayed frozen."""
    digest = hashlib.sha256()
    for name in sorted(backbone.weights):
        digest.update(name.encode("utf-8"))
        digest.update(backbone.weights[name].tobytes())
    return digest.hexdigest()


def split_files(data: Path):
    """Locate train.jsonl and val.jsonl under a prepared directory."""
    if data.is_dir():
        return data / "train.jsonl", data / "val.jsonl"
    raise ValueError(f"--data must be a prepared directory with train.jsonl and val.jsonl: {data}")


class TrainCommand(BaseCommand):
    def __init__(self):
        super().__init__(name="train", description="Train the regression head with early stopping")

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Register --data and the training flags."""
        parser.add_argument("--data", required=True, help="directory produced by 'prepare'")
        parser.add_argument("--out", required=True, help="output directory")
        parser.add_argument("--config", help="key=value run config")
        parser.add_argument("--seed", type=int, help="root seed")
        parser.add_argument("--resolution", type=int, help="image resolution override")
        parser.add_argument("--char-limit", type=int, dest="char_limit", help="per-field character limit")
        parser.add_argument("--max-epochs", type=int, dest="max_epochs", help="epoch budget")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Train the head and write the checkpoint and history."""
        data = self.require_path(args.data, "data")
        cfg = self.load_config(args)
        train_cfg = cfg.train_config()
        if train_cfg.max_epochs == 0:
            raise ValueError("nothing to train")
        train_path, val_path = split_files(data)
        train_set = load_rating_samples(train_path)
        val_set = load_rating_samples(val_path)
        out = self.output_dir(args)

        backbone = init_backbone(cfg.backbone_config())
        frozen = weights_digest(backbone)
        extractor = FeatureExtractor(backbone, cfg.prompt, cfg.image, batch_size=cfg.extract_batch_size)
        result = train(train_set, val_set, extractor, train_cfg)
        if weights_digest(backbone) != frozen:
            raise RuntimeError("backbone weights changed during training")

        best = result.best_record
        checkpoint = out / "checkpoint.bin"
        save_checkpoint(checkpoint, result.params, {
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "epoch": result.best_epoch,
            "val_rmse": best.val_rmse,
            "val_plcc": best.val_plcc,
            "val_srcc": best.val_srcc,
            "run_config": cfg.model_dump(mode="json"),
        })
        write_history(out / "history.csv", result.history, preamble=preamble(cfg))
        print(f"✅ Best epoch {result.best_epoch}: val_plcc={best.val_plcc:.4f} val_rmse={best.val_rmse:.4f}")
        return CommandResult(
            success=True,
            data={"checkpoint": str(checkpoint), "best_epoch": result.best_epoch, "val_plcc": best.val_plcc},
            metadata={"epochs_run": len(result.history), "config_hash": config_hash(cfg)},
        )
