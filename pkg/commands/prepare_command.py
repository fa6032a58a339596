"""``prepare``: catalogue JSON-lines → train/validation splits."""

import argparse
import logging

from config import config_hash
from dataset.pipeline import prepare_dataset
from .base_command import BaseCommand, CommandResult

logger = logging.getLogger(__name__)


class PrepareCommand(BaseCommand):
    def __init__(self):
        super().__init__(
            name="prepare",
            description="Filter, stratify and split catalogue metadata into train/val JSON-lines",
        )

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Register --data and the sampling flags."""
        parser.add_argument("--data", required=True, help="JSON-lines file or directory of *.jsonl files")
        parser.add_argument("--out", required=True, help="output directory")
        parser.add_argument("--config", help="key=value run config")
        parser.add_argument("--seed", type=int, help="root seed")
        parser.add_argument("--k", type=int, help="per-tail sample size per category")
        parser.add_argument("--holdout", type=int, help="validation set size")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Run the data pipeline and write the prepared split."""
        data = self.require_path(args.data, "data")
        cfg = self.load_config(args)
        out = self.output_dir(args)
        summary = prepare_dataset(
            data, cfg.sampling_config(), out,
            config_hash=config_hash(cfg), root_seed=cfg.seed,
            show_progress=logger.isEnabledFor(logging.INFO),
        )
        return CommandResult(
            success=True,
            data=summary.model_dump(),
            metadata={"out": str(out), "config_hash": config_hash(cfg)},
        )
