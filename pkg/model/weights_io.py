"""Single-file binary blob for weights and checkpoints.

Layout (all integers little-endian)::

    b"BRWB" | uint32 version | uint32 header_len | header JSON | array bytes

The JSON header holds free-form metadata plus the ordered array table
(name, dtype, shape). Array bodies follow back to back, little-endian.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

MAGIC = b"BRWB"
VERSION = 1
_DTYPES = {"f4": "<f4", "f8": "<f8"}


def encode_blob(arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> bytes:
    """Serialize named arrays plus a JSON header."""
    table = []
    bodies = []
    for name, array in arrays.items():
        kind = "f8" if array.dtype == np.float64 else "f4"
        data = np.ascontiguousarray(array, dtype=_DTYPES[kind])
        table.append({"name": name, "dtype": kind, "shape": list(data.shape)})
        bodies.append(data.tobytes())
    header = json.dumps({"meta": meta, "arrays": table}, sort_keys=True, separators=(",", ":"))
    header_bytes = header.encode("utf-8")
    return MAGIC + struct.pack("<II", VERSION, len(header_bytes)) + header_bytes + b"".join(bodies)


def decode_blob(payload: bytes) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Inverse of :func:`encode_blob`."""
    if payload[:4] != MAGIC:
        raise ValueError("not a weight blob (bad magic)")
    version, header_len = struct.unpack("<II", payload[4:12])
    if version != VERSION:
        raise ValueError(f"unsupported blob version {version}")
    header = json.loads(payload[12:12 + header_len].decode("utf-8"))
    offset = 12 + header_len
    arrays: Dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        data = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
        arrays[entry["name"]] = data.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
        offset += count * dtype.itemsize
    if offset != len(payload):
        raise ValueError("trailing bytes after the last array")
    return header["meta"], arrays


def save_blob(path: Union[str, Path], arrays: Dict[str, np.ndarray], meta: Dict[str, Any]):
    """Write an encoded blob to disk."""
    Path(path).write_bytes(encode_blob(arrays, meta))


def load_blob(path: Union[str, Path]) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Read and decode a blob from disk."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"blob not found: {path}")
    return decode_blob(path.read_bytes())
