"""Four-level embedding index and the pluggable provider contract.

Levels are sentence, chunk, image, object.  All rows are l2-normalized
float32; query scores are cosines clamped at zero so they can be used
directly as seed activation mass.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from . import mgem
from .errors import DimensionMismatch, ProviderFailure, ZeroVector

LEVELS = ("sentence", "chunk", "image", "object")

NORM_TOLERANCE = 1e-4


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed_text(self, text: str) -> np.ndarray: ...

    def embed_image(self, image_ref: str) -> np.ndarray: ...


class FixtureProvider:
    """Deterministic hash-seeded unit vectors, with an override table.

    Makes the whole engine runnable without any ML runtime: the same
    input string always maps to the same pseudo-random direction, and
    tests can plant exact vectors for chosen inputs.
    """

    provider_id = "fixture"

    def __init__(self, dim: int = 64, overrides: dict[str, np.ndarray] | None = None):
        self.dim = dim
        self.overrides = {
            key: np.asarray(vec, dtype=np.float32)
            for key, vec in (overrides or {}).items()
        }

    def _vector(self, key: str) -> np.ndarray:
        if key in self.overrides:
            return self.overrides[key]
        seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim).astype(np.float32)
        return vec / np.linalg.norm(vec)

    def embed_text(self, text: str) -> np.ndarray:
        return self._vector("text:" + text)

    def embed_image(self, image_ref: str) -> np.ndarray:
        return self._vector("image:" + image_ref)


class FileProvider:
    """Looks vectors up in pre-exported MGEM files; never computes."""

    provider_id = "files"

    def __init__(self, embeddings_dir):
        self.table: dict[str, np.ndarray] = {}
        self.dim = 0
        for path in sorted(Path(embeddings_dir).glob("*.mgem")):
            data, ids = mgem.read_mgem(path)
            if self.dim and data.shape[1] != self.dim:
                raise DimensionMismatch(
                    f"{path}: dim {data.shape[1]} != {self.dim}"
                )
            self.dim = data.shape[1]
            for row, element_id in enumerate(ids):
                self.table[element_id] = data[row]
        if not self.table:
            raise ProviderFailure(str(embeddings_dir), "no MGEM files found")

    def _lookup(self, key: str) -> np.ndarray:
        if key not in self.table:
            raise ProviderFailure(key, "no precomputed embedding")
        return self.table[key]

    def embed_text(self, text: str) -> np.ndarray:
        return self._lookup(text)

    def embed_image(self, image_ref: str) -> np.ndarray:
        return self._lookup(image_ref)


class RemoteProvider:
    """HTTP embedding endpoint: POST {"id", "text"|"imageRef"} -> float array."""

    provider_id = "remote"

    def __init__(self, url: str, dim: int, client=None):
        import httpx

        self.url = url
        self.dim = dim
        self.client = client or httpx.Client()

    def _post(self, payload: dict) -> np.ndarray:
        response = self.client.post(self.url, json=payload)
        if response.status_code != 200:
            raise ProviderFailure(payload["id"], f"HTTP {response.status_code}")
        body = response.json()
        values = body["embedding"] if isinstance(body, dict) else body
        return np.asarray(values, dtype=np.float32)

    def embed_text(self, text: str) -> np.ndarray:
        return self._post({"id": text, "text": text})

    def embed_image(self, image_ref: str) -> np.ndarray:
        return self._post({"id": image_ref, "imageRef": image_ref})


@dataclass
class EmbeddingMatrix:
    level: str
    data: np.ndarray          # rows x dim, float32, rows l2-normalized
    ids: list[str]
    id_index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.id_index = {eid: i for i, eid in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def rows(self) -> int:
        return self.data.shape[0]


@dataclass
class EmbeddingIndex:
    matrices: dict[str, EmbeddingMatrix]
    provider: EmbeddingProvider

    @property
    def dim(self) -> int:
        return next(iter(self.matrices.values())).dim


def normalize_rows(data: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(data, axis=1)
    if np.any(norms == 0):
        raise ZeroVector(f"zero vector at row {int(np.argmin(norms))}")
    return (data / norms[:, None]).astype(np.float32)


def _embed_all(provider, elements, embed) -> np.ndarray:
    dim = provider.dim
    out = np.empty((len(elements), dim), dtype=np.float32)
    for i, (element_id, payload) in enumerate(elements):
        try:
            vec = embed(payload)
        except ProviderFailure:
            raise
        except Exception as exc:
            raise ProviderFailure(element_id, str(exc)) from exc
        vec = np.asarray(vec, dtype=np.float32)
        if vec.shape != (dim,):
            raise DimensionMismatch(
                f"{element_id}: provider returned shape {vec.shape}, expected ({dim},)"
            )
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ZeroVector(f"provider returned zero vector for {element_id}")
        out[i] = vec / norm
    return out


def build_matrices(
    sentences: list[tuple[str, str]],   # (sentenceId, text)
    chunks: list[tuple[str, str]],      # (chunkId, text)
    images: list[str],                  # imageIds
    objects: list[str],                 # objectIds
    provider: EmbeddingProvider,
) -> EmbeddingIndex:
    """Embed every element of each level; commit in deterministic order."""
    matrices = {
        "sentence": EmbeddingMatrix(
            "sentence",
            _embed_all(provider, sentences, provider.embed_text),
            [sid for sid, _ in sentences],
        ),
        "chunk": EmbeddingMatrix(
            "chunk",
            _embed_all(provider, chunks, provider.embed_text),
            [cid for cid, _ in chunks],
        ),
        "image": EmbeddingMatrix(
            "image",
            _embed_all(provider, [(i, i) for i in images], provider.embed_image),
            list(images),
        ),
        "object": EmbeddingMatrix(
            "object",
            _embed_all(provider, [(o, o) for o in objects], provider.embed_image),
            list(objects),
        ),
    }
    return EmbeddingIndex(matrices=matrices, provider=provider)


def similarities(query: np.ndarray, matrix: EmbeddingMatrix) -> np.ndarray:
    """Cosine scores against every row, clamped at zero."""
    query = np.asarray(query, dtype=np.float32)
    if query.shape != (matrix.dim,):
        raise DimensionMismatch(
            f"query shape {query.shape}, matrix dim {matrix.dim}"
        )
    return np.maximum(matrix.data @ query, 0.0)


def save_index(index: EmbeddingIndex, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for level, matrix in index.matrices.items():
        mgem.write_mgem(directory / f"{level}.mgem", matrix.data, matrix.ids)
    meta = {"provider": index.provider.provider_id, "dim": index.dim}
    (directory / "provider.json").write_text(json.dumps(meta, sort_keys=True))


def load_index(directory, provider: EmbeddingProvider) -> EmbeddingIndex:
    directory = Path(directory)
    matrices = {}
    for level in LEVELS:
        data, ids = mgem.read_mgem(directory / f"{level}.mgem")
        matrices[level] = EmbeddingMatrix(level, data, ids)
    return EmbeddingIndex(matrices=matrices, provider=provider)
