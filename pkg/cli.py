"""Command-line entry point: ``bounded-rating <command> [flags]``."""

import sys
from typing import List, Optional

from commands import CommandManager
from config import Config, configure_logging


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns 0 on success, 1 on failure, 2 on bad arguments."""
    manager = CommandManager()
    parser = manager.build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        Config.validate()
        configure_logging()
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2

    result = manager.execute(args.command, args)
    if not result.success:
        print(f"❌ {args.command} failed: {result.error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
