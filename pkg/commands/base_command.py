"""Base class shared by every CLI subcommand."""

import argparse
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel

from config import RunConfig, load_run_config

# flag destination -> flat config key
FLAG_KEYS = {
    "seed": "seed",
    "k": "sampling_k",
    "holdout": "sampling_holdout_n",
    "resolution": "image_resolution",
    "char_limit": "prompt_char_limit",
    "max_epochs": "train_max_epochs",
}


class CommandResult(BaseModel):
    """Result from a command execution."""
    success: bool
    data: Any = None
    error: Optional[str] = None
    metadata: Optional[Dict[str, Any]] = None


class BaseCommand(ABC):
    """Abstract base class for all subcommands."""

    def __init__(self, name: str, description: str):
        self.name = name
        self.description = description

    @abstractmethod
    def add_arguments(self, parser: argparse.ArgumentParser):
        """Register the command's flags."""

    @abstractmethod
    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Run the command; may raise, the manager turns errors into results."""

    def load_config(self, args: argparse.Namespace, skip=()) -> RunConfig:
        """Read the run config and apply the flags this command was given."""
        overrides = {
            key: getattr(args, flag)
            for flag, key in FLAG_KEYS.items()
            if flag not in skip and getattr(args, flag, None) is not None
        }
        return load_run_config(getattr(args, "config", None), overrides)

    @staticmethod
    def output_dir(args: argparse.Namespace) -> Path:
        """Create ``--out`` if needed and return it."""
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return out

    @staticmethod
    def require_path(path: Optional[str], what: str) -> Path:
        """Check that a required path flag is set and exists."""
        if not path:
            raise ValueError(f"--{what} is required")
        resolved = Path(path)
        if not resolved.exists():
            raise FileNotFoundError(f"{what} path not found: {resolved}")
        return resolved

    def __str__(self) -> str:
        return f"{self.name}: {self.description}"
