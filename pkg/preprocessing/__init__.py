"""Deterministic text and image preprocessing."""

from .text_processor import (
    MetadataFields,
    PromptConfig,
    TokenSequence,
    BatchedTokens,
    truncate_field,
    build_prompt,
    tokenize,
    pad_batch,
    sequence_budget,
)
from .image_processor import (
    ImageTensor,
    VisualTokens,
    ImageConfig,
    resize_bilinear,
    normalize,
    patchify,
    pixel_shuffle,
    image_to_visual_tokens,
)
from .image_io import load_image, save_image, load_images

__all__ = [
    "MetadataFields",
    "PromptConfig",
    "TokenSequence",
    "BatchedTokens",
    "truncate_field",
    "build_prompt",
    "tokenize",
    "pad_batch",
    "sequence_budget",
    "ImageTensor",
    "VisualTokens",
    "ImageConfig",
    "resize_bilinear",
    "normalize",
    "patchify",
    "pixel_shuffle",
    "image_to_visual_tokens",
    "load_image",
    "save_image",
    "load_images",
]
