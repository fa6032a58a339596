"""CLI subcommands."""

from .base_command import BaseCommand, CommandResult
from .command_manager import CommandManager

__all__ = ["BaseCommand", "CommandResult", "CommandManager"]
