"""Closed-form parameter and FLOP model of the vision-language regressor.

Counting convention (the one that reproduces the published operating points):

* only linear layers are counted, as multiply-accumulates (MACs);
* the vision tower runs over every patch, the connector over every visual
  token, the decoder over visual + text tokens, the head once per sample;
* softmax, norms, residuals and positional terms are ignored;
* attention score/value products (``2·T²·d`` per layer) are added only when
  ``count_attention_scores`` is set.

The shipped arch files leave ``count_attention_scores`` off. The full
estimate with the ``T²·d`` terms is available, but switching them on moves
the 512 px / 384 px cost ratio to about 1.69, outside the 1.57 ± 0.08 the
published operating points imply. Linear-only counting matches all four
reference points within 2 %.

``flop_convention = two_flops_per_mac`` doubles every figure.
"""

import logging
import math
import re
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, model_validator

logger = logging.getLogger(__name__)

_REFERENCE_KEY = re.compile(r"^reference_gflops_(\d+)_(\d+)$")


class ArchSpec(BaseModel):
    name: str = "unnamed"
    approximate: bool = True
    flop_convention: Literal["mac", "two_flops_per_mac"] = "mac"
    count_attention_scores: bool = False

    vision_layers: int = Field(default=12, ge=0)
    vision_width: int = Field(default=768, ge=1)
    vision_heads: int = Field(default=12, ge=1)
    vision_patch: int = Field(default=16, ge=1)
    vision_mlp_ratio: float = Field(default=4.0, gt=0)
    vision_max_resolution: int = Field(default=512, ge=1)
    vision_norm: Literal["layernorm", "rmsnorm"] = "layernorm"
    vision_attn_bias: bool = True
    vision_mlp_bias: bool = True

    connector_shuffle: int = Field(default=4, ge=1)
    connector_out_dim: int = Field(default=576, ge=1)
    connector_bias: bool = False

    decoder_layers: int = Field(default=30, ge=0)
    decoder_width: int = Field(default=576, ge=2)
    decoder_heads: int = Field(default=9, ge=1)
    decoder_kv_heads: int = Field(default=3, ge=1)
    decoder_mlp_ratio: float = Field(default=2.6666666667, gt=0)
    decoder_gated_mlp: bool = True
    decoder_norm: Literal["layernorm", "rmsnorm"] = "rmsnorm"
    decoder_vocab: int = Field(default=49152, ge=1)
    decoder_attn_bias: bool = False

    text_chars_per_token: float = Field(default=3.0, gt=0)
    text_overhead_tokens: int = Field(default=40, ge=0)

    # (resolution, char_limit) -> published GFLOPs
    references: Dict[Tuple[int, int], float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.vision_width % self.vision_heads:
            raise ValueError("inconsistent spec: vision_width not divisible by vision_heads")
        if self.decoder_width % self.decoder_heads:
            raise ValueError("inconsistent spec: decoder_width not divisible by decoder_heads")
        if self.decoder_heads % self.decoder_kv_heads:
            raise ValueError("inconsistent spec: decoder_heads not divisible by decoder_kv_heads")
        if self.connector_out_dim != self.decoder_width:
            raise ValueError("inconsistent spec: connector_out_dim must equal decoder_width")
        if self.decoder_width % 2:
            raise ValueError("inconsistent spec: decoder_width must be even for the head")
        return self

    @property
    def vision_mlp_dim(self) -> int:
        return round(self.vision_width * self.vision_mlp_ratio)

    @property
    def decoder_mlp_dim(self) -> int:
        return round(self.decoder_width * self.decoder_mlp_ratio)

    @property
    def decoder_kv_dim(self) -> int:
        return self.decoder_width * self.decoder_kv_heads // self.decoder_heads

    @property
    def connector_in_dim(self) -> int:
        return self.vision_width * self.connector_shuffle ** 2

    @property
    def flop_multiplier(self) -> int:
        return 2 if self.flop_convention == "two_flops_per_mac" else 1


class ParamCounts(BaseModel):
    vision: int
    connector: int
    decoder: int
    head: int

    @property
    def total(self) -> int:
        return self.vision + self.connector + self.decoder + self.head

    @property
    def trainable(self) -> int:
        """Decoder and head are fine-tuned; vision tower and connector stay frozen."""
        return self.decoder + self.head


class FlopBreakdown(BaseModel):
    vision: int
    connector: int
    decoder: int
    head: int
    attention_scores: int = 0

    @property
    def total(self) -> int:
        return self.vision + self.connector + self.decoder + self.head + self.attention_scores

    def __float__(self) -> float:
        return float(self.total)


class OperatingPoint(BaseModel):
    arch: str
    resolution: int
    char_limit: int
    visual_tokens: int
    text_tokens: int
    params: int
    flops: int
    reference_flops: Optional[float] = None

    @property
    def deviation(self) -> Optional[float]:
        """Relative deviation from the published figure."""
        if not self.reference_flops:
            return None
        return (self.flops - self.reference_flops) / self.reference_flops

    def as_row(self) -> Dict:
        row = self.model_dump(exclude={"reference_flops"})
        row["reference_flops"] = "" if self.reference_flops is None else self.reference_flops
        row["deviation"] = "" if self.deviation is None else self.deviation
        return row


def _norm_params(kind: str, width: int) -> int:
    return 2 * width if kind == "layernorm" else width


def _attention_params(width: int, kv_dim: int, bias: bool) -> int:
    # q and o are width×width; k and v project to the (possibly grouped) kv width
    weights = 2 * width * width + 2 * width * kv_dim
    return weights + (2 * width + 2 * kv_dim if bias else 0)


def _mlp_params(width: int, hidden: int, gated: bool, bias: bool) -> int:
    weights = (3 if gated else 2) * width * hidden
    if not bias:
        return weights
    return weights + (2 * hidden + width if gated else hidden + width)


def head_param_count(d_model: int) -> int:
    """Parameters of the two-layer regression head of width ``d``."""
    hidden = d_model // 2
    return d_model * hidden + hidden + hidden + 1


def param_count(spec: ArchSpec) -> ParamCounts:
    """Closed-form parameter counts per component."""
    w = spec.vision_width
    patch_embed = spec.vision_patch ** 2 * 3 * w + w
    positions = (spec.vision_max_resolution // spec.vision_patch) ** 2 * w
    vision_layer = (
        _attention_params(w, w, spec.vision_attn_bias)
        + _mlp_params(w, spec.vision_mlp_dim, False, spec.vision_mlp_bias)
        + 2 * _norm_params(spec.vision_norm, w)
    )
    vision = patch_embed + positions + spec.vision_layers * vision_layer
    if spec.vision_layers:
        vision += _norm_params(spec.vision_norm, w)

    connector = spec.connector_in_dim * spec.connector_out_dim
    if spec.connector_bias:
        connector += spec.connector_out_dim

    d = spec.decoder_width
    decoder_layer = (
        _attention_params(d, spec.decoder_kv_dim, spec.decoder_attn_bias)
        + _mlp_params(d, spec.decoder_mlp_dim, spec.decoder_gated_mlp, False)
        + 2 * _norm_params(spec.decoder_norm, d)
    )
    decoder = spec.decoder_vocab * d + spec.decoder_layers * decoder_layer
    if spec.decoder_layers:
        decoder += _norm_params(spec.decoder_norm, d)

    return ParamCounts(vision=vision, connector=connector, decoder=decoder, head=head_param_count(d))


def visual_token_count(spec: ArchSpec, resolution: int) -> int:
    """Decoder-side visual tokens for a square image at ``resolution``."""
    if resolution % spec.vision_patch:
        raise ValueError("resolution/patch mismatch")
    if resolution > spec.vision_max_resolution:
        raise ValueError(f"resolution {resolution} exceeds vision_max_resolution {spec.vision_max_resolution}")
    grid = resolution // spec.vision_patch
    if grid % spec.connector_shuffle:
        raise ValueError("shuffle factor mismatch")
    return (grid // spec.connector_shuffle) ** 2


def text_token_budget(spec: ArchSpec, char_limit: int) -> int:
    """Worst-case text tokens: template overhead plus four truncated fields."""
    if char_limit < 1:
        raise ValueError(f"character limit must be >= 1, got {char_limit}")
    return spec.text_overhead_tokens + math.ceil(4 * char_limit / spec.text_chars_per_token)


def flop_estimate(spec: ArchSpec, visual_tokens: int, text_tokens: int) -> FlopBreakdown:
    """FLOPs of one forward pass; depends on the token counts only."""
    if visual_tokens < 1 or text_tokens < 1:
        raise ValueError("token counts must be positive")
    patches = visual_tokens * spec.connector_shuffle ** 2
    seq = visual_tokens + text_tokens
    w = spec.vision_width
    d = spec.decoder_width
    hidden = d // 2

    vision_per_token = spec.vision_layers * (4 * w * w + 2 * w * spec.vision_mlp_dim)
    vision = patches * (spec.vision_patch ** 2 * 3 * w + vision_per_token)
    connector = visual_tokens * spec.connector_in_dim * spec.connector_out_dim
    attention = 2 * d * d + 2 * d * spec.decoder_kv_dim
    mlp = (3 if spec.decoder_gated_mlp else 2) * d * spec.decoder_mlp_dim
    decoder = seq * spec.decoder_layers * (attention + mlp)
    head = d * hidden + hidden

    scores = 0
    if spec.count_attention_scores:
        scores = spec.vision_layers * 2 * patches ** 2 * w + spec.decoder_layers * 2 * seq ** 2 * d

    k = spec.flop_multiplier
    return FlopBreakdown(
        vision=k * vision, connector=k * connector, decoder=k * decoder,
        head=k * head, attention_scores=k * scores,
    )


def estimate_at(spec: ArchSpec, resolution: int, char_limit: int) -> FlopBreakdown:
    """FLOPs at a resolution and per-field character limit."""
    return flop_estimate(spec, visual_token_count(spec, resolution), text_token_budget(spec, char_limit))


def operating_point_report(spec: ArchSpec,
                           points: Iterable[Tuple[int, int]] = ((384, 50), (384, 100), (384, 200), (512, 100)),
                           ) -> List[OperatingPoint]:
    """Estimates and deviations for each operating point."""
    params = param_count(spec).total
    rows = []
    for resolution, char_limit in points:
        visual = visual_token_count(spec, resolution)
        text = text_token_budget(spec, char_limit)
        reference = spec.references.get((resolution, char_limit))
        point = OperatingPoint(
            arch=spec.name, resolution=resolution, char_limit=char_limit,
            visual_tokens=visual, text_tokens=text, params=params,
            flops=flop_estimate(spec, visual, text).total,
            reference_flops=None if reference is None else reference * 1e9,
        )
        if point.deviation is not None:
            logger.info(
                f"{spec.name} @ {resolution}px/{char_limit} chars: {point.flops / 1e9:.2f} GFLOPs "
                f"vs published {reference:.0f} ({point.deviation:+.1%})"
            )
        rows.append(point)
    return rows


def parse_arch_spec(values: Dict[str, Optional[str]], source: str = "<arch spec>") -> ArchSpec:
    """Parse ``key=value`` arch-spec text into an :class:`ArchSpec`."""
    known = set(ArchSpec.model_fields) - {"references"}
    fields = {}
    references = {}
    for key, value in values.items():
        match = _REFERENCE_KEY.match(key)
        if match:
            references[(int(match.group(1)), int(match.group(2)))] = float(value)
        elif key in known:
            fields[key] = value
        else:
            raise ValueError(f"{source}: unknown arch spec key '{key}'")
    return ArchSpec(references=references, **fields)


def load_arch_spec(path: Union[str, Path]) -> ArchSpec:
    """Read an ArchSpec from a ``key=value`` file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"arch spec not found: {path}")
    spec = parse_arch_spec(dotenv_values(path), source=str(path))
    if spec.approximate:
        logger.info(f"Arch spec '{spec.name}' uses best-effort dimensions")
    return spec
