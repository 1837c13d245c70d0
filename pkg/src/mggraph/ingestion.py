"""Ingestion contract: JSONL loading and schema validation for a corpus dir.

Expected files: chunks.jsonl, sentences.jsonl, entities.jsonl,
images.jsonl, groundings.jsonl, plus optional embeddings/*.mgem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaError
from .model import (
    ChunkRecord,
    DepToken,
    EntityMention,
    GroundingRecord,
    ParsedSentence,
)


@dataclass
class Corpus:
    chunks: list[ChunkRecord]
    sentences: list[ParsedSentence]
    image_ids: list[str]
    groundings: list[GroundingRecord]

    def chunk_texts(self) -> dict[str, str]:
        return {c.chunk_id: c.text for c in self.chunks}


def _read_jsonl(path: Path):
    if not path.is_file():
        raise SchemaError(path, 0, "file not found")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise SchemaError(path, lineno, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise SchemaError(path, lineno, "record must be a JSON object")
            yield lineno, record


def _require(record, fields, path, lineno):
    for name, kind in fields.items():
        if name not in record:
            raise SchemaError(path, lineno, f"missing field {name!r}")
        if not isinstance(record[name], kind):
            raise SchemaError(
                path, lineno,
                f"field {name!r} must be {kind.__name__ if not isinstance(kind, tuple) else 'number'}",
            )


def _load_chunks(path: Path) -> list[ChunkRecord]:
    chunks = []
    seen = set()
    for lineno, rec in _read_jsonl(path):
        _require(rec, {"chunkId": str, "text": str, "sentenceIds": list, "imageIds": list}, path, lineno)
        if not rec["sentenceIds"]:
            raise SchemaError(path, lineno, "sentenceIds must be nonempty")
        if rec["chunkId"] in seen:
            raise SchemaError(path, lineno, f"duplicate chunkId {rec['chunkId']!r}")
        seen.add(rec["chunkId"])
        chunks.append(
            ChunkRecord(
                chunk_id=rec["chunkId"],
                text=rec["text"],
                sentence_ids=tuple(rec["sentenceIds"]),
                image_ids=tuple(rec["imageIds"]),
            )
        )
    return chunks


def _load_sentences(path: Path) -> dict[str, dict]:
    sentences: dict[str, dict] = {}
    for lineno, rec in _read_jsonl(path):
        _require(rec, {"sentenceId": str, "chunkId": str, "tokens": list}, path, lineno)
        if rec["sentenceId"] in sentences:
            raise SchemaError(path, lineno, f"duplicate sentenceId {rec['sentenceId']!r}")
        tokens = []
        for i, tok in enumerate(rec["tokens"]):
            if not isinstance(tok, dict):
                raise SchemaError(path, lineno, f"token {i} must be an object")
            _require(tok, {"index": int, "text": str, "lemma": str, "pos": str, "dep": str, "head": int}, path, lineno)
            if tok["index"] != i:
                raise SchemaError(path, lineno, f"token {i} has index {tok['index']}")
            if not 0 <= tok["head"] < len(rec["tokens"]):
                raise SchemaError(path, lineno, f"token {i} head {tok['head']} out of range")
            tokens.append(
                DepToken(i, tok["text"], tok["lemma"], tok["pos"], tok["dep"], tok["head"])
            )
        sentences[rec["sentenceId"]] = {
            "chunk_id": rec["chunkId"],
            "tokens": tuple(tokens),
            "entities": [],
        }
    return sentences


def _load_entities(path: Path, sentences: dict[str, dict]) -> None:
    for lineno, rec in _read_jsonl(path):
        _require(rec, {"sentenceId": str, "start": int, "end": int, "surface": str, "label": str, "rootIndex": int}, path, lineno)
        sid = rec["sentenceId"]
        if sid not in sentences:
            raise SchemaError(path, lineno, f"unknown sentenceId {sid!r}")
        tokens = sentences[sid]["tokens"]
        start, end, root = rec["start"], rec["end"], rec["rootIndex"]
        if not 0 <= start <= end < len(tokens):
            raise SchemaError(path, lineno, f"span [{start}, {end}] out of range")
        if not start <= root <= end:
            raise SchemaError(path, lineno, f"rootIndex {root} outside span")
        expected = " ".join(tokens[i].text for i in range(start, end + 1))
        if rec["surface"] != expected:
            raise SchemaError(
                path, lineno,
                f"surface {rec['surface']!r} does not match span tokens {expected!r}",
            )
        sentences[sid]["entities"].append(
            EntityMention(start, end, rec["surface"], rec["label"], root)
        )


def _load_images(path: Path) -> list[str]:
    image_ids = []
    seen = set()
    for lineno, rec in _read_jsonl(path):
        _require(rec, {"imageId": str}, path, lineno)
        if rec["imageId"] in seen:
            raise SchemaError(path, lineno, f"duplicate imageId {rec['imageId']!r}")
        seen.add(rec["imageId"])
        image_ids.append(rec["imageId"])
    return image_ids


def _load_groundings(path: Path) -> list[GroundingRecord]:
    groundings = []
    seen = set()
    for lineno, rec in _read_jsonl(path):
        _require(rec, {"entityKey": str, "imageId": str, "objectId": str, "confidence": (int, float)}, path, lineno)
        sigma = float(rec["confidence"])
        if not 0.0 <= sigma <= 1.0:
            raise SchemaError(path, lineno, f"confidence {sigma} outside [0, 1]")
        if rec["objectId"] in seen:
            raise SchemaError(path, lineno, f"duplicate objectId {rec['objectId']!r}")
        seen.add(rec["objectId"])
        groundings.append(
            GroundingRecord(
                entity_key=rec["entityKey"],
                image_id=rec["imageId"],
                object_id=rec["objectId"],
                region_ref=rec.get("regionRef", ""),
                confidence=sigma,
            )
        )
    return groundings


def load_corpus(corpus_dir) -> Corpus:
    """Load and validate the full ingestion contract of a corpus directory."""
    corpus_dir = Path(corpus_dir)
    chunks = _load_chunks(corpus_dir / "chunks.jsonl")
    raw_sentences = _load_sentences(corpus_dir / "sentences.jsonl")
    _load_entities(corpus_dir / "entities.jsonl", raw_sentences)
    image_ids = _load_images(corpus_dir / "images.jsonl")
    groundings = _load_groundings(corpus_dir / "groundings.jsonl")

    known_chunks = {c.chunk_id for c in chunks}
    sentences = []
    for sid, data in raw_sentences.items():
        if data["chunk_id"] not in known_chunks:
            raise SchemaError(
                corpus_dir / "sentences.jsonl", 0,
                f"sentence {sid} references unknown chunk {data['chunk_id']!r}",
            )
        sentences.append(
            ParsedSentence(sid, data["chunk_id"], data["tokens"], tuple(data["entities"]))
        )
    for chunk in chunks:
        for sid in chunk.sentence_ids:
            if sid not in raw_sentences:
                raise SchemaError(
                    corpus_dir / "chunks.jsonl", 0,
                    f"chunk {chunk.chunk_id} references unknown sentence {sid!r}",
                )
    return Corpus(chunks=chunks, sentences=sentences, image_ids=image_ids, groundings=groundings)
