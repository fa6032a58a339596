"""Bounded, deterministic prompt construction and byte-level tokenization."""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

PAD_ID = 0
IMAGE_ID = 1
BYTE_OFFSET = 2
VOCAB_SIZE = 256 + BYTE_OFFSET
IMAGE_TAG = "<image>"

PROMPT_TEMPLATE = (
    "<image> The average user rating for this product. Text metadata: "
    "Title: {title}, Description: {description}, Features: {features}, "
    "Main Category: {main_category}"
)

# Separator between records in the JSON-lines files.
RECORD_SEPARATOR = "\n"


@dataclass(frozen=True)
class MetadataFields:
    """The four metadata fields that enter the prompt."""
    title: str = ""
    description: str = ""
    features: str = ""
    main_category: str = ""

    def __post_init__(self):
        for name in ("title", "description", "features", "main_category"):
            value = getattr(self, name)
            if not isinstance(value, str):
                raise ValueError(f"metadata field '{name}' must be text")
            if RECORD_SEPARATOR in value:
                raise ValueError(f"metadata field '{name}' contains the record separator")


@dataclass(frozen=True)
class TokenSequence:
    ids: List[int]
    mask: List[int]

    def __post_init__(self):
        if len(self.ids) != len(self.mask):
            raise ValueError("ids and mask must have the same length")

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class BatchedTokens:
    """B×T token ids with the matching binary attention mask."""
    ids: np.ndarray
    mask: np.ndarray

    @property
    def shape(self):
        return self.ids.shape


class PromptConfig(BaseModel):
    """Truncation budget and token bound of the text side."""
    char_limit: int = Field(default=100, ge=1)
    max_text_tokens: int = Field(default=1024, ge=1)

    @model_validator(mode="after")
    def _check_template_fits(self):
        floor = template_token_count()
        if self.max_text_tokens < floor:
            raise ValueError(
                f"max_text_tokens={self.max_text_tokens} is below the empty template length {floor}"
            )
        return self


def truncate_field(text: str, limit: int) -> str:
    """First ``limit`` characters, counted in Unicode scalar values."""
    if limit < 1:
        raise ValueError(f"character limit must be >= 1, got {limit}")
    return text[:limit]


def build_prompt(fields: MetadataFields, cfg: PromptConfig) -> str:
    """Fill the prompt template with truncated metadata fields."""
    limit = cfg.char_limit
    return PROMPT_TEMPLATE.format(
        title=truncate_field(fields.title, limit),
        description=truncate_field(fields.description, limit),
        features=truncate_field(fields.features, limit),
        main_category=truncate_field(fields.main_category, limit),
    )


def _encode(prompt: str) -> List[int]:
    ids: List[int] = []
    for index, piece in enumerate(prompt.split(IMAGE_TAG)):
        if index > 0:
            ids.append(IMAGE_ID)
        ids.extend(byte + BYTE_OFFSET for byte in piece.encode("utf-8"))
    return ids


def template_token_count() -> int:
    """Token length of the template rendered with empty fields."""
    return len(_encode(PROMPT_TEMPLATE.format(title="", description="", features="", main_category="")))


def tokenize(prompt: str, cfg: PromptConfig) -> TokenSequence:
    """Byte-level encoding: id = byte + 2, PAD = 0, ``<image>`` = 1."""
    if prompt is None:
        raise ValueError("prompt must not be None")
    ids = _encode(prompt)[:cfg.max_text_tokens]
    return TokenSequence(ids=ids, mask=[1] * len(ids))


def pad_batch(seqs: Sequence[TokenSequence], pad_to: Optional[int] = None) -> BatchedTokens:
    """Right-pad to the longest sequence, or to exactly ``pad_to`` positions."""
    if not seqs:
        raise ValueError("empty batch")
    longest = max(len(seq) for seq in seqs)
    width = longest if pad_to is None else pad_to
    if width < longest:
        raise ValueError(f"pad_to={pad_to} is shorter than the longest sequence ({longest})")
    ids = np.full((len(seqs), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=np.int64)
    for row, seq in enumerate(seqs):
        ids[row, :len(seq)] = seq.ids
        mask[row, :len(seq)] = seq.mask
    return BatchedTokens(ids=ids, mask=mask)


def sequence_budget(prompt_cfg: PromptConfig, image_cfg) -> int:
    """Fixed multimodal length: visual tokens plus the text token bound."""
    return image_cfg.token_count + prompt_cfg.max_text_tokens
