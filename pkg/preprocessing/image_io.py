"""Readers and writers for the two supported image formats.

* Binary PPM (``P6``, maxval 255), decoded and encoded with Pillow.
* Raw tensor: 8-byte header with H and W as little-endian uint32, followed by
  H·W·3 little-endian float32 values in row-major order.
"""

import concurrent.futures
import io
import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from PIL import Image

from .image_processor import ImageTensor

RAW_SUFFIXES = (".raw", ".f32", ".tensor")


def decode_ppm(data: bytes) -> ImageTensor:
    """Decode a binary PPM into a float image in [0, 1]."""
    if data[:2] != b"P6":
        raise ValueError(f"unsupported PPM magic {data[:2]!r}")
    try:
        with Image.open(io.BytesIO(data), formats=["PPM"]) as image:
            # Pillow reads maxval-255 rasters with the plain "raw" codec
            if image.mode != "RGB" or not image.tile or image.tile[0][0] != "raw":
                raise ValueError("unsupported PPM maxval (only 255 is accepted)")
            width, height = image.size
            if width == 0 or height == 0:
                raise ValueError("degenerate PPM image")
            raster = np.asarray(image, dtype=np.uint8)
    except (OSError, SyntaxError) as e:
        raise ValueError(f"cannot decode PPM: {e}")
    return ImageTensor(raster.astype(np.float64) / 255.0)


def encode_ppm(img: ImageTensor) -> bytes:
    """Encode a float image as 8-bit binary PPM."""
    raster = np.rint(np.clip(img.data, 0.0, 1.0) * 255.0).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(raster).save(buffer, format="PPM")
    return buffer.getvalue()


def decode_raw_tensor(data: bytes) -> ImageTensor:
    """Decode the raw float32 tensor format."""
    if len(data) < 8:
        raise ValueError("truncated raw tensor header")
    height, width = struct.unpack("<II", data[:8])
    if height == 0 or width == 0:
        raise ValueError("degenerate image")
    expected = height * width * 3 * 4
    if len(data) - 8 != expected:
        raise ValueError(f"raw tensor body has {len(data) - 8} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=8).astype(np.float64)
    if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise ValueError("raw tensor values must be finite and within [0, 1]")
    return ImageTensor(values.reshape(height, width, 3))


def encode_raw_tensor(img: ImageTensor) -> bytes:
    """Encode an image in the raw float32 tensor format."""
    return struct.pack("<II", img.height, img.width) + img.data.astype("<f4").tobytes()


def load_image(path: Union[str, Path]) -> ImageTensor:
    """Load a PPM or raw tensor, chosen by file suffix."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    data = path.read_bytes()
    if path.suffix.lower() in RAW_SUFFIXES:
        return decode_raw_tensor(data)
    return decode_ppm(data)


def save_image(img: ImageTensor, path: Union[str, Path]):
    """Save a PPM or raw tensor, chosen by file suffix."""
    path = Path(path)
    payload = encode_raw_tensor(img) if path.suffix.lower() in RAW_SUFFIXES else encode_ppm(img)
    path.write_bytes(payload)


def load_images(paths: Sequence[Union[str, Path]], workers: int = 1) -> List[ImageTensor]:
    """Decode many images; results keep the input order regardless of ``workers``."""
    if workers <= 1:
        return [load_image(path) for path in paths]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(load_image, paths))
