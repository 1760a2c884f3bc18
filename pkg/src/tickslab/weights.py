"""Flat binary weight container.

Layout: 8-byte magic ``CTMW0001``, then one record per tensor:
u32 name byte-length, UTF-8 name, u32 rows, u32 cols, rows*cols
little-endian float32 values in row-major order.  Vectors are stored as
(1, n) matrices.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import WeightFileError

MAGIC = b"CTMW0001"
_U32 = struct.Struct("<I")


def save_weights(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write named 2-D float32 tensors; iteration order is preserved."""
    blob = bytearray(MAGIC)
    for name, tensor in tensors.items():
        arr = np.ascontiguousarray(tensor, dtype=np.float32)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise WeightFileError(f"tensor {name!r} must be 1-D or 2-D, got {arr.ndim}-D")
        encoded = name.encode("utf-8")
        blob += _U32.pack(len(encoded))
        blob += encoded
        blob += _U32.pack(arr.shape[0])
        blob += _U32.pack(arr.shape[1])
        blob += arr.astype("<f4").tobytes(order="C")
    Path(path).write_bytes(bytes(blob))


def load_weights(path: str | Path) -> dict[str, np.ndarray]:
    """Read a container written by :func:`save_weights`."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise WeightFileError(f"bad magic {data[:8]!r}")
    out: dict[str, np.ndarray] = {}
    pos = 8
    while pos < len(data):
        try:
            (name_len,) = _U32.unpack_from(data, pos)
            pos += 4
            name = data[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (rows,) = _U32.unpack_from(data, pos)
            (cols,) = _U32.unpack_from(data, pos + 4)
            pos += 8
            nbytes = rows * cols * 4
            if pos + nbytes > len(data):
                raise WeightFileError(f"tensor {name!r} truncated")
            flat = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=pos)
            pos += nbytes
        except (struct.error, UnicodeDecodeError) as exc:
            raise WeightFileError(f"corrupt record at byte {pos}: {exc}") from exc
        if name in out:
            raise WeightFileError(f"duplicate tensor {name!r}")
        out[name] = flat.reshape(rows, cols).astype(np.float32)
    return out
