"""Embedding export for a parsed corpus.

Writes one MGEM matrix per level (sentence, chunk, image, object) into an
embeddings directory the retrieval engine can consume directly.  Rows are
l2-normalized float32; the id sidecar carries the exact lookup key the
engine will present: the element text for the two text levels, and the
element id for the two visual levels.

Two encoders:

* SyntheticEncoder derives a deterministic unit vector from a hash of the
  input, for offline pipelines and testing.
* EndpointEncoder calls an HTTP embedding service with bounded retries.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
import time
from pathlib import Path

import httpx
import numpy as np

logger = logging.getLogger("mggraph_adapters.embeddings")

MGEM_MAGIC = b"MGEM"
MGEM_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


def write_mgem(path, data: np.ndarray, ids: list[str]) -> None:
    """Write a matrix in the MGEM binary format with its id sidecar."""
    data = np.ascontiguousarray(data, dtype="<f4")
    rows, dim = data.shape
    if rows != len(ids):
        raise ValueError(f"{rows} rows but {len(ids)} ids")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MGEM_MAGIC, MGEM_VERSION, dim, rows))
        fh.write(data.tobytes())
    ids_path = path.with_suffix(".ids.jsonl")
    with open(ids_path, "w", encoding="utf-8") as fh:
        for row, element_id in enumerate(ids):
            fh.write(json.dumps({"row": row, "id": element_id},
                                sort_keys=True) + "\n")


def read_mgem(path) -> tuple[np.ndarray, list[str]]:
    path = Path(path)
    raw = path.read_bytes()
    magic, version, dim, rows = _HEADER.unpack_from(raw)
    if magic != MGEM_MAGIC or version != MGEM_VERSION:
        raise ValueError(f"{path}: not a supported MGEM file")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    data = data.reshape(rows, dim)
    ids = []
    with open(path.with_suffix(".ids.jsonl"), encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                ids.append(json.loads(line)["id"])
    if len(ids) != rows:
        raise ValueError(f"{path}: {rows} rows but {len(ids)} ids")
    return data, ids


class SyntheticEncoder:
    """Deterministic hash-seeded unit vectors; no model, no network."""

    name = "synthetic"

    def __init__(self, dim: int = 64):
        self.dim = dim

    def _vector(self, key: str) -> np.ndarray:
        seed = int.from_bytes(
            hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim).astype(np.float32)
        return vec / np.linalg.norm(vec)

    def encode_text(self, text: str) -> np.ndarray:
        return self._vector("t\x00" + text)

    def encode_image(self, image_ref: str) -> np.ndarray:
        return self._vector("i\x00" + image_ref)


class EndpointEncoder:
    """HTTP embedding service client with bounded retries.

    POSTs {"id": ..., "text": ...} or {"id": ..., "imageRef": ...} and
    expects a float array, either bare or under an "embedding" key.
    """

    name = "endpoint"

    def __init__(self, url: str, dim: int, client=None, max_retries: int = 3,
                 backoff: float = 0.5):
        self.url = url
        self.dim = dim
        self.client = client or httpx.Client()
        self.max_retries = max_retries
        self.backoff = backoff
        self.retries_used = 0

    def _post(self, payload: dict) -> np.ndarray:
        last_error = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.retries_used += 1
                time.sleep(self.backoff * attempt)
            try:
                response = self.client.post(self.url, json=payload)
            except httpx.HTTPError as exc:
                last_error = str(exc)
                continue
            if response.status_code != 200:
                last_error = f"HTTP {response.status_code}"
                continue
            body = response.json()
            values = body["embedding"] if isinstance(body, dict) else body
            vec = np.asarray(values, dtype=np.float32)
            if vec.shape != (self.dim,):
                raise ValueError(
                    f"{payload['id']}: endpoint returned shape {vec.shape}, "
                    f"expected ({self.dim},)")
            return vec
        raise RuntimeError(f"{payload['id']}: embedding failed: {last_error}")

    def encode_text(self, text: str) -> np.ndarray:
        return self._post({"id": text, "text": text})

    def encode_image(self, image_ref: str) -> np.ndarray:
        return self._post({"id": image_ref, "imageRef": image_ref})


def _read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def _corpus_elements(corpus_dir: Path) -> dict[str, list[str]]:
    """Collect the lookup keys per level, deduplicated in file order."""
    chunks = _read_jsonl(corpus_dir / "chunks.jsonl")
    sentences = _read_jsonl(corpus_dir / "sentences.jsonl")
    images = _read_jsonl(corpus_dir / "images.jsonl")
    groundings_path = corpus_dir / "groundings.jsonl"
    groundings = _read_jsonl(groundings_path) if groundings_path.exists() else []

    def dedup(items):
        seen, out = set(), []
        for item in items:
            if item not in seen:
                seen.add(item)
                out.append(item)
        return out

    return {
        "sentence": dedup(
            " ".join(t["text"] for t in s["tokens"]) for s in sentences),
        "chunk": dedup(c["text"] for c in chunks),
        "image": dedup(i["imageId"] for i in images),
        "object": dedup(g["objectId"] for g in groundings),
    }


def _encode_rows(keys: list[str], encode) -> np.ndarray:
    out = np.empty((len(keys), 0), dtype=np.float32)
    rows = []
    for key in keys:
        vec = np.asarray(encode(key), dtype=np.float32)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValueError(f"zero embedding for {key!r}")
        rows.append(vec / norm)
    if rows:
        out = np.stack(rows)
    return out


def export_embeddings(corpus_dir, out_dir, encoder,
                      query_texts: list[str] | None = None) -> dict:
    """Embed every corpus element and write per-level MGEM files.

    query_texts, when given, are appended to the chunk-level file so a
    file-backed engine can also embed incoming queries from the same
    export.  Returns row counts per level.
    """
    corpus_dir = Path(corpus_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    elements = _corpus_elements(corpus_dir)
    if query_texts:
        existing = set(elements["chunk"]) | set(elements["sentence"])
        elements["query"] = [q for q in dict.fromkeys(query_texts)
                             if q not in existing]

    counts = {}
    for level, keys in elements.items():
        encode = (encoder.encode_image if level in ("image", "object")
                  else encoder.encode_text)
        data = _encode_rows(keys, encode)
        if data.size == 0:
            data = data.reshape(0, encoder.dim)
        write_mgem(out_dir / f"{level}.mgem", data, keys)
        counts[level] = len(keys)
        logger.info("wrote %s.mgem: %d rows", level, len(keys))
    return counts
