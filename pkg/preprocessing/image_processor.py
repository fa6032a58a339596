"""Fixed-resolution image pipeline: resize, normalize, patchify, pixel-shuffle."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


@dataclass
class ImageTensor:
    """H×W×3 float image, row-major, values in [0, 1]."""
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"image must be H×W×3, got shape {self.data.shape}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass
class VisualTokens:
    """count×dim visual token matrix."""
    data: np.ndarray

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


class ImageConfig(BaseModel):
    resolution: int = Field(default=384, ge=1)
    patch_size: int = Field(default=16, ge=1)
    shuffle_factor: int = Field(default=3, ge=1)
    mean: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    std: Tuple[float, float, float] = (0.5, 0.5, 0.5)

    @field_validator("std")
    @classmethod
    def _nonzero_std(cls, value):
        if any(component == 0 for component in value):
            raise ValueError("invalid normalization: std components must be nonzero")
        return value

    @model_validator(mode="after")
    def _check_grid(self):
        if self.resolution % self.patch_size:
            raise ValueError("resolution/patch mismatch")
        if (self.resolution // self.patch_size) % self.shuffle_factor:
            raise ValueError("shuffle factor mismatch")
        return self

    @property
    def grid(self) -> int:
        return self.resolution // self.patch_size

    @property
    def token_count(self) -> int:
        """Visual tokens per image after pixel shuffle."""
        return (self.grid // self.shuffle_factor) ** 2

    @property
    def token_dim(self) -> int:
        """Width of one visual token after pixel shuffle."""
        return self.patch_size * self.patch_size * 3 * self.shuffle_factor ** 2


def _axis_weights(in_size: int, out_size: int):
    # Half-pixel centers: src = (dst + 0.5) * scale - 0.5, clamped to the image.
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    lower = np.floor(src).astype(np.int64)
    upper = np.minimum(lower + 1, in_size - 1)
    return lower, upper, src - lower


def resize_bilinear(img: ImageTensor, out_h: int, out_w: int) -> ImageTensor:
    """Bilinear resize with half-pixel centers and edge clamping."""
    if img.height == 0 or img.width == 0 or out_h < 1 or out_w < 1:
        raise ValueError("degenerate image")
    if (img.height, img.width) == (out_h, out_w):
        return ImageTensor(img.data.copy())

    top, bottom, fy = _axis_weights(img.height, out_h)
    left, right, fx = _axis_weights(img.width, out_w)

    rows_a = img.data[top]
    rows_b = img.data[bottom]
    rows = rows_a + fy[:, None, None] * (rows_b - rows_a)
    cols_a = rows[:, left]
    cols_b = rows[:, right]
    out = cols_a + fx[None, :, None] * (cols_b - cols_a)
    return ImageTensor(np.clip(out, 0.0, 1.0))


def normalize(img: ImageTensor, mean, std) -> np.ndarray:
    """Per-channel (x - mean) / std; the result is no longer bounded."""
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if mean.shape != (3,) or std.shape != (3,) or np.any(std == 0):
        raise ValueError("invalid normalization")
    return (img.data - mean) / std


def patchify(pixels: np.ndarray, patch_size: int) -> np.ndarray:
    """Split an R×R×3 array into a (R/p)×(R/p) grid of flattened p·p·3 patches."""
    height, width, channels = pixels.shape
    if height != width or height % patch_size:
        raise ValueError("resolution/patch mismatch")
    grid = height // patch_size
    patches = pixels.reshape(grid, patch_size, grid, patch_size, channels)
    patches = patches.transpose(0, 2, 1, 3, 4)
    return patches.reshape(grid, grid, patch_size * patch_size * channels)


def unpatchify(patches: np.ndarray, patch_size: int) -> np.ndarray:
    """Inverse of :func:`patchify`."""
    grid = patches.shape[0]
    channels = patches.shape[2] // (patch_size * patch_size)
    pixels = patches.reshape(grid, grid, patch_size, patch_size, channels)
    return pixels.transpose(0, 2, 1, 3, 4).reshape(grid * patch_size, grid * patch_size, channels)


def pixel_shuffle(grid: np.ndarray, factor: int) -> np.ndarray:
    """Fold each r×r block of a g×g token grid into one token of dim c·r²."""
    size, _, dim = grid.shape
    if size % factor:
        raise ValueError("shuffle factor mismatch")
    out = size // factor
    blocks = grid.reshape(out, factor, out, factor, dim).transpose(0, 2, 1, 3, 4)
    return blocks.reshape(out, out, factor * factor * dim)


def image_to_visual_tokens(img: ImageTensor, cfg: ImageConfig) -> VisualTokens:
    """Full deterministic pipeline; the token count depends on ``cfg`` only."""
    resized = resize_bilinear(img, cfg.resolution, cfg.resolution)
    pixels = normalize(resized, cfg.mean, cfg.std)
    shuffled = pixel_shuffle(patchify(pixels, cfg.patch_size), cfg.shuffle_factor)
    return VisualTokens(shuffled.reshape(-1, shuffled.shape[-1]))
