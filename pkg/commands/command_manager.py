"""Registry of CLI subcommands."""

import argparse
import logging
from typing import Dict, List, Optional

from .base_command import BaseCommand, CommandResult
from .prepare_command import PrepareCommand
from .train_command import TrainCommand
from .eval_command import EvalCommand
from .ces_command import CESCommand
from .flops_command import FlopsCommand

logger = logging.getLogger(__name__)


class CommandManager:
    """Holds the subcommands and runs them without letting exceptions escape."""

    def __init__(self):
        self.commands: Dict[str, BaseCommand] = {}
        for command in (PrepareCommand(), TrainCommand(), EvalCommand(), CESCommand(), FlopsCommand()):
            self.add_command(command)

    def add_command(self, command: BaseCommand):
        """Add a new command to the manager."""
        self.commands[command.name] = command

    def get_command(self, name: str) -> Optional[BaseCommand]:
        """Get a command by name."""
        return self.commands.get(name)

    def get_command_names(self) -> List[str]:
        """Get names of all available commands."""
        return list(self.commands.keys())

    def build_parser(self) -> argparse.ArgumentParser:
        """Build the top-level parser with one subparser per command."""
        parser = argparse.ArgumentParser(
            prog="bounded-rating",
            description="Bounded-compute multimodal rating regression",
        )
        subparsers = parser.add_subparsers(dest="command", required=True)
        for name, command in self.commands.items():
            sub = subparsers.add_parser(name, help=command.description, description=command.description)
            command.add_arguments(sub)
        return parser

    def execute(self, name: str, args: argparse.Namespace) -> CommandResult:
        """Execute a command; failures come back as an unsuccessful result."""
        command = self.get_command(name)
        if not command:
            return CommandResult(
                success=False,
                error=f"Command '{name}' not found. Available commands: {', '.join(self.get_command_names())}",
            )
        try:
            return command.execute(args)
        except Exception as e:
            logger.error(f"Command '{name}' failed: {e}")
            return CommandResult(success=False, error=str(e))
