"""``eval``: score a checkpoint on a prepared dataset."""

import argparse
import logging

import numpy as np

from config import RunConfig, config_hash
from csv_utils import format_preamble
from dataset.samples import load_rating_samples
from evaluation.metrics import density_grid, evaluate, write_density_grid, write_eval_report
from model.backbone import init_backbone
from training.checkpoint import load_checkpoint
from training.trainer import FeatureExtractor, RatingModel
from .base_command import BaseCommand, CommandResult

logger = logging.getLogger(__name__)


class EvalCommand(BaseCommand):
    def __init__(self):
        super().__init__(name="eval", description="Report RMSE/PLCC/SRCC and the prediction density grid")

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Register --checkpoint and --data."""
        parser.add_argument("--checkpoint", required=True, help="checkpoint.bin written by 'train'")
        parser.add_argument("--data", required=True, help="prepared directory (uses val.jsonl) or a JSON-lines file")
        parser.add_argument("--out", required=True, help="output directory")
        parser.add_argument("--config", help="key=value run config, compared against the checkpoint")
        parser.add_argument("--seed", type=int, help="root seed")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Rebuild the model from the checkpoint and score it on the dataset."""
        checkpoint = self.require_path(args.checkpoint, "checkpoint")
        data = self.require_path(args.data, "data")
        params, meta = load_checkpoint(checkpoint)
        stored = RunConfig(**meta["run_config"])
        current = self.load_config(args)
        if config_hash(current) != meta["config_hash"]:
            logger.warning(
                f"Config hash {config_hash(current)} differs from the checkpoint's {meta['config_hash']}; "
                f"evaluating with the checkpoint configuration"
            )

        samples = load_rating_samples(data / "val.jsonl" if data.is_dir() else data)
        extractor = FeatureExtractor(
            init_backbone(stored.backbone_config()), stored.prompt, stored.image,
            batch_size=stored.extract_batch_size,
        )
        preds = RatingModel(extractor, params).predict(samples)
        targets = np.array([sample.target for sample in samples])
        report = evaluate(preds, targets)
        cells = density_grid(preds, targets)

        out = self.output_dir(args)
        header = format_preamble(meta["config_hash"], meta["seed"])
        write_eval_report(report, out / "eval_report.csv", out / "eval_report.txt", preamble=header)
        write_density_grid(cells, out / "density_grid.csv", preamble=header)
        print(f"📊 n={report.n} rmse={report.rmse:.4f} plcc={report.plcc:.4f} srcc={report.srcc:.4f}")
        return CommandResult(success=True, data=report.model_dump(), metadata={"cells": len(cells)})
