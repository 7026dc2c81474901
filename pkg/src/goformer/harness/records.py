"""GOTR training records.

Layout (little-endian)::

    b"GOTR"  u32 version=1  u64 record count
    per record: 31*361 f32 planes (plane-major), u16 policy index, f32 value

Policy index 0..360 is a board point in the 19x19 grid; 361 marks a pass.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from goformer.features import GRID, NUM_PLANES, PASS_INDEX, TrainingSample

MAGIC = b"GOTR"
VERSION = 1
PLANE_FLOATS = NUM_PLANES * GRID * GRID

HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("count", "<u8")])
RECORD = np.dtype([("planes", "<f4", (PLANE_FLOATS,)), ("policy", "<u2"), ("value", "<f4")])


class RecordSet:
    """Columnar view of a record file: planes (N,31,19,19), policy (N,), value (N,)."""

    def __init__(self, planes: np.ndarray, policy: np.ndarray, value: np.ndarray):
        if not (len(planes) == len(policy) == len(value)):
            raise ValueError("planes, policy and value lengths differ")
        self.planes = planes
        self.policy = policy
        self.value = value

    def __len__(self) -> int:
        return len(self.policy)

    def __getitem__(self, i: int) -> TrainingSample:
        return TrainingSample(self.planes[i], int(self.policy[i]), float(self.value[i]))

    @classmethod
    def from_samples(cls, samples: Sequence[TrainingSample]) -> "RecordSet":
        if not samples:
            return cls(np.zeros((0, NUM_PLANES, GRID, GRID), np.float32), np.zeros(0, np.int64), np.zeros(0, np.float32))
        planes = np.stack([np.asarray(s.planes, dtype=np.float32) for s in samples])
        policy = np.array([s.policy_target for s in samples], dtype=np.int64)
        value = np.array([s.value_target for s in samples], dtype=np.float32)
        return cls(planes, policy, value)

    def samples(self) -> list[TrainingSample]:
        return [self[i] for i in range(len(self))]

    def subset(self, idx) -> "RecordSet":
        return RecordSet(self.planes[idx], self.policy[idx], self.value[idx])


def write_records(path: str | Path, samples: Iterable[TrainingSample] | RecordSet) -> int:
    rs = samples if isinstance(samples, RecordSet) else RecordSet.from_samples(list(samples))
    if len(rs) and (rs.policy.min() < 0 or rs.policy.max() > PASS_INDEX):
        raise ValueError("policy index out of range")
    header = np.array([(MAGIC, VERSION, len(rs))], dtype=HEADER)
    body = np.empty(len(rs), dtype=RECORD)
    body["planes"] = rs.planes.reshape(len(rs), PLANE_FLOATS)
    body["policy"] = rs.policy
    body["value"] = rs.value
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(body.tobytes())
    return len(rs)


def read_records(path: str | Path) -> RecordSet:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.itemsize:
        raise ValueError(f"{path}: truncated header")
    header = np.frombuffer(raw, dtype=HEADER, count=1)[0]
    if header["magic"] != MAGIC:
        raise ValueError(f"{path}: not a GOTR file")
    if header["version"] != VERSION:
        raise ValueError(f"{path}: unsupported GOTR version {header['version']}")
    count = int(header["count"])
    if len(raw) != HEADER.itemsize + count * RECORD.itemsize:
        raise ValueError(f"{path}: expected {count} records, size mismatch")
    body = np.frombuffer(raw, dtype=RECORD, count=count, offset=HEADER.itemsize)
    planes = body["planes"].astype(np.float32).reshape(count, NUM_PLANES, GRID, GRID)
    return RecordSet(planes, body["policy"].astype(np.int64), body["value"].astype(np.float32))
