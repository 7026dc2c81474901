"""GOWT weight checkpoints.

Layout (little-endian)::

    b"GOWT"  u32 version  u32 len + utf-8 architecture descriptor
    u32 entry count, then per entry:
        u32 len + utf-8 name, u32 ndim, u32 dims..., f32 payload (C order)
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Mapping

import numpy as np

MAGIC = b"GOWT"
VERSION = 1


def _write_str(f: BinaryIO, s: str) -> None:
    raw = s.encode("utf-8")
    f.write(struct.pack("<I", len(raw)))
    f.write(raw)


def _read_exact(f: BinaryIO, n: int) -> bytes:
    raw = f.read(n)
    if len(raw) != n:
        raise ValueError("truncated checkpoint")
    return raw


def _read_str(f: BinaryIO) -> str:
    (n,) = struct.unpack("<I", _read_exact(f, 4))
    return _read_exact(f, n).decode("utf-8")


def save_weights(path: str | Path, descriptor: str, arrays: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        _write_str(f, descriptor)
        f.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            _write_str(f, name)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_weights(path: str | Path) -> tuple[str, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        if _read_exact(f, 4) != MAGIC:
            raise ValueError(f"{path}: not a GOWT checkpoint")
        (version,) = struct.unpack("<I", _read_exact(f, 4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        descriptor = _read_str(f)
        (count,) = struct.unpack("<I", _read_exact(f, 4))
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            name = _read_str(f)
            (ndim,) = struct.unpack("<I", _read_exact(f, 4))
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim))
            n = int(np.prod(shape, dtype=np.int64))
            arrays[name] = np.frombuffer(_read_exact(f, 4 * n), dtype="<f4").reshape(shape).astype(np.float32)
    return descriptor, arrays
