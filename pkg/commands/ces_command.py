"""``ces``: efficiency-adjusted score for a given PLCC and architecture."""

import argparse
import logging
from pathlib import Path

from config import preamble
from evaluation.efficiency_score import ResourceProfile, ces_report, write_ces_report
from evaluation.flop_model import estimate_at, load_arch_spec, param_count
from .base_command import BaseCommand, CommandResult

logger = logging.getLogger(__name__)


class CESCommand(BaseCommand):
    def __init__(self):
        super().__init__(name="ces", description="Compute resource cost C, multiplier E and CES")

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Register --plcc, --params, --flops and the operating-point flags."""
        parser.add_argument("--plcc", type=float, required=True, help="validation PLCC")
        parser.add_argument("--archspec", help="ArchSpec file (defaults to the config's arch_spec)")
        parser.add_argument("--resolution", type=int, help="operating-point resolution")
        parser.add_argument("--char-limit", type=int, dest="char_limit", help="operating-point character limit")
        parser.add_argument("--flops", type=float, help="pin the FLOP count instead of estimating it")
        parser.add_argument("--params", type=float, help="pin the parameter count instead of counting it")
        parser.add_argument("--out", default=".", help="output directory")
        parser.add_argument("--config", help="key=value run config")
        parser.add_argument("--seed", type=int, help="root seed")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Score one operating point and write the CES report."""
        # the operating point describes the real architecture, not the toy image pipeline
        cfg = self.load_config(args, skip=("resolution", "char_limit"))
        spec_path = self.require_path(args.archspec or cfg.arch_spec, "archspec")
        spec = load_arch_spec(spec_path)
        resolution = args.resolution or cfg.image.resolution
        char_limit = args.char_limit or cfg.prompt.char_limit

        params = args.params or param_count(spec).total
        flops = args.flops or estimate_at(spec, resolution, char_limit).total
        report = ces_report(args.plcc, ResourceProfile(params=params, flops=flops), cfg.ces)

        out = self.output_dir(args)
        cfg = cfg.model_copy(update={"arch_spec": str(Path(spec_path))})
        write_ces_report(report, out / "ces_report.csv", preamble=preamble(cfg))
        print(f"⚡ C={report.C:.4f} E={report.E:.4f} CES={report.ces:.4f}")
        return CommandResult(
            success=True,
            data=report.model_dump(),
            metadata={"arch": spec.name, "resolution": resolution, "char_limit": char_limit},
        )
