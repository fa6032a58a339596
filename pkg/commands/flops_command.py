"""``flops``: parameter/FLOP table over operating points."""

import argparse
import logging

from config import REPO_ROOT, preamble
from csv_utils import write_csv
from evaluation.flop_model import load_arch_spec, operating_point_report
from .base_command import BaseCommand, CommandResult

logger = logging.getLogger(__name__)

DEFAULT_SPECS = ("configs/smolvlm2_256m.arch", "configs/smolvlm2_500m.arch")
REPORT_FIELDS = [
    "arch", "resolution", "char_limit", "visual_tokens", "text_tokens",
    "params", "flops", "reference_flops", "deviation",
]
DEFAULT_POINTS = ((384, 50), (384, 100), (384, 200), (512, 100))


class FlopsCommand(BaseCommand):
    def __init__(self):
        super().__init__(name="flops", description="Tabulate parameters and FLOPs per operating point")

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Register --archspec and the operating-point flags."""
        parser.add_argument("--archspec", action="append", help="ArchSpec file; repeatable")
        parser.add_argument("--resolution", type=int, help="single operating-point resolution")
        parser.add_argument("--char-limit", type=int, dest="char_limit", help="single operating-point character limit")
        parser.add_argument("--out", default=".", help="output directory")
        parser.add_argument("--config", help="key=value run config")
        parser.add_argument("--seed", type=int, help="root seed")

    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Write parameter counts and the operating-point FLOP report."""
        cfg = self.load_config(args, skip=("resolution", "char_limit"))
        paths = args.archspec or [str(REPO_ROOT / path) for path in DEFAULT_SPECS]
        rows = []
        for path in paths:
            spec = load_arch_spec(self.require_path(path, "archspec"))
            if args.resolution or args.char_limit:
                points = [(args.resolution or cfg.image.resolution, args.char_limit or cfg.prompt.char_limit)]
            else:
                points = sorted(set(DEFAULT_POINTS) | set(spec.references))
            rows.extend(operating_point_report(spec, points))

        out = self.output_dir(args)
        write_csv(out / "flops_report.csv", REPORT_FIELDS, [row.as_row() for row in rows], preamble=preamble(cfg))
        for row in rows:
            print(f"🧮 {row.arch} @ {row.resolution}px/{row.char_limit}: "
                  f"{row.flops / 1e9:.2f} GFLOPs, {row.params / 1e6:.1f}M params")
        return CommandResult(success=True, data=[row.as_row() for row in rows])
