"""MGEM binary vector files.

Layout: magic "MGEM", u32 version, u32 dim, u64 rows, then row-major
little-endian float32.  The row -> element-id map lives in a sibling
JSONL file (one {"row", "id"} object per line).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CorruptIndex

MAGIC = b"MGEM"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def ids_path(path) -> Path:
    return Path(path).with_suffix(".ids.jsonl")


def write_mgem(path, data: np.ndarray, ids: list[str]) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2:
        raise ValueError("MGEM data must be 2-dimensional")
    if data.shape[0] != len(ids):
        raise ValueError("row count and id count disagree")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.shape[1], data.shape[0]))
        fh.write(data.tobytes())
    with open(ids_path(path), "w", encoding="utf-8") as fh:
        for row, element_id in enumerate(ids):
            fh.write(json.dumps({"row": row, "id": element_id}) + "\n")


def read_mgem(path) -> tuple[np.ndarray, list[str]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CorruptIndex(path, str(exc)) from exc
    if len(raw) < _HEADER.size:
        raise CorruptIndex(path, "truncated header")
    magic, version, dim, rows = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptIndex(path, f"bad magic {magic!r}")
    if version != VERSION:
        raise CorruptIndex(path, f"unsupported version {version}")
    expected = _HEADER.size + 4 * dim * rows
    if len(raw) != expected:
        raise CorruptIndex(path, f"expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, dim)

    ids: list[str] = []
    try:
        with open(ids_path(path), encoding="utf-8") as fh:
            for line in fh:
                ids.append(json.loads(line)["id"])
    except (OSError, ValueError, KeyError) as exc:
        raise CorruptIndex(ids_path(path), str(exc)) from exc
    if len(ids) != rows:
        raise CorruptIndex(ids_path(path), f"{len(ids)} ids for {rows} rows")
    return data.copy(), ids
