"""Configuration for the bounded rating regressor.

Process-level settings come from the environment (``.env`` supported).
Run settings come from a ``key=value`` file whose keys are prefixed by
section: ``prompt_*``, ``image_*``, ``backbone_*``, ``train_*``,
``sampling_*``, ``ces_*``, plus ``seed``, ``arch_spec`` and
``extract_batch_size``. Flag overrides use the same keys and win.
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field

from csv_utils import format_preamble
from dataset.pipeline import SamplingConfig
from evaluation.efficiency_score import CESConfig
from model.backbone import BackboneConfig
from model.seeded_rng import derive_seed
from preprocessing.image_processor import ImageConfig
from preprocessing.text_processor import PromptConfig
from training.trainer import TrainConfig

# Load environment variables
load_dotenv()

REPO_ROOT = Path(__file__).resolve().parent


class Config:
    """Process-level configuration."""

    LOG_LEVEL = os.getenv("BR_LOG", "WARNING").upper()
    DEFAULT_CONFIG = os.getenv("BR_CONFIG", "")
    LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    @classmethod
    def validate(cls):
        """Reject unknown log levels."""
        if not isinstance(logging.getLevelName(cls.LOG_LEVEL), int):
            raise ValueError(f"BR_LOG={cls.LOG_LEVEL} is not a logging level")
        return True


def configure_logging(level: Optional[str] = None) -> int:
    """Install a single stream handler; returns the numeric level in effect."""
    name = (level or Config.LOG_LEVEL).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"unknown log level '{name}'")
    logging.basicConfig(level=numeric, format=Config.LOG_FORMAT, force=True)
    return numeric


class BackboneSettings(BaseModel):
    """User-facing backbone knobs; seed and input widths are derived."""
    d_model: int = Field(default=576, ge=2)
    n_mix_layers: int = Field(default=2, ge=1)


# prefix -> (attribute, model, keys the file may not set)
SECTIONS: Dict[str, Tuple[str, Type[BaseModel], Tuple[str, ...]]] = {
    "prompt_": ("prompt", PromptConfig, ()),
    "image_": ("image", ImageConfig, ()),
    "backbone_": ("backbone", BackboneSettings, ()),
    "train_": ("train", TrainConfig, ("seed",)),
    "sampling_": ("sampling", SamplingConfig, ("seed",)),
    "ces_": ("ces", CESConfig, ()),
}
TOP_LEVEL = ("seed", "arch_spec", "extract_batch_size")


class RunConfig(BaseModel):
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    arch_spec: str = "configs/smolvlm2_256m.arch"
    extract_batch_size: int = Field(default=32, ge=1)
    prompt: PromptConfig = Field(default_factory=PromptConfig)
    image: ImageConfig = Field(default_factory=ImageConfig)
    backbone: BackboneSettings = Field(default_factory=BackboneSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)
    sampling: SamplingConfig = Field(default_factory=SamplingConfig)
    ces: CESConfig = Field(default_factory=CESConfig)

    def backbone_config(self) -> BackboneConfig:
        """Backbone config with its derived seed and input width."""
        return BackboneConfig(
            d_model=self.backbone.d_model,
            n_mix_layers=self.backbone.n_mix_layers,
            seed=derive_seed(self.seed, "backbone"),
            visual_dim=self.image.token_dim,
        )

    def train_config(self) -> TrainConfig:
        """Training config with its derived seed."""
        return self.train.model_copy(update={"seed": derive_seed(self.seed, "train")})

    def sampling_config(self) -> SamplingConfig:
        """Sampling config with its derived split seed."""
        return self.sampling.model_copy(update={"seed": derive_seed(self.seed, "split")})

    def arch_spec_path(self) -> Path:
        return Path(self.arch_spec)

    def hashed_sections(self) -> Dict[str, Any]:
        """Every section that feeds the config hash."""
        return self.model_dump(mode="json", exclude={"arch_spec"})


def _parse_value(model: Type[BaseModel], field: str, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    annotation = str(model.model_fields[field].annotation)
    if "Tuple" in annotation or "tuple" in annotation:
        return tuple(float(part) for part in raw.split(","))
    if raw.strip().lower() in ("", "none") and "Optional" in annotation:
        return None
    return raw.strip()


def build_run_config(values: Dict[str, Any], source: str = "<config>") -> RunConfig:
    """Map flat ``section_field`` keys onto the nested :class:`RunConfig`."""
    top: Dict[str, Any] = {}
    sections: Dict[str, Dict[str, Any]] = {attr: {} for attr, _, _ in SECTIONS.values()}
    for key, raw in values.items():
        if raw is None:
            raise ValueError(f"{source}: key '{key}' has no value")
        if key in TOP_LEVEL:
            top[key] = raw.strip() if isinstance(raw, str) else raw
            continue
        for prefix, (attr, model, forbidden) in SECTIONS.items():
            if key.startswith(prefix):
                field = key[len(prefix):]
                if field in model.model_fields and field not in forbidden:
                    sections[attr][field] = _parse_value(model, field, raw)
                    break
        else:
            raise ValueError(f"{source}: unknown config key '{key}'")

    if "arch_spec" not in top:
        top["arch_spec"] = str(REPO_ROOT / RunConfig.model_fields["arch_spec"].default)
    return RunConfig(**top, **{attr: fields for attr, fields in sections.items()})


def load_run_config(path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read the config file (if any) and apply flag overrides on top."""
    values: Dict[str, Any] = {}
    path = path or Config.DEFAULT_CONFIG or None
    if path:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config not found: {path}")
        values.update(dotenv_values(path))
        arch = values.get("arch_spec")
        if arch and not Path(arch).is_absolute():
            values["arch_spec"] = str(path.resolve().parent / arch)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_run_config(values, source=str(path or "<defaults>"))


def config_hash(cfg: RunConfig) -> str:
    """First 16 hex chars of SHA-256 over the sections and the arch spec bytes."""
    digest = hashlib.sha256()
    digest.update(json.dumps(cfg.hashed_sections(), sort_keys=True, separators=(",", ":")).encode("utf-8"))
    arch = cfg.arch_spec_path()
    if arch.is_file():
        digest.update(arch.read_bytes())
    return digest.hexdigest()[:16]


def preamble(cfg: RunConfig) -> str:
    """The ``config_hash=<h> seed=<n>`` line for this config."""
    return format_preamble(config_hash(cfg), cfg.seed)
