"""Self-contained validation of an exported corpus directory.

Checks the five JSONL files against the ingestion contract without
importing the engine: required fields and types, token index and head
consistency, entity spans matching their surface text, and all
cross-file references.  Returns a list of problem strings; an empty
list means the export is ingestible.
"""

from __future__ import annotations

import json
from pathlib import Path

TOKEN_FIELDS = {"index", "text", "lemma", "pos", "dep", "head"}


def _iter_jsonl(path, problems):
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        problems.append(f"{path.name}: missing file")
        return
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                problems.append(f"{path.name}:{lineno}: invalid JSON: {exc.msg}")


def _require(rec, field, kind, where, problems) -> bool:
    value = rec.get(field)
    if not isinstance(value, kind) or (kind is str and not value):
        problems.append(f"{where}: missing or invalid {field!r}")
        return False
    return True


def validate_corpus(corpus_dir) -> list[str]:
    corpus_dir = Path(corpus_dir)
    problems: list[str] = []

    chunks = {}
    for lineno, rec in _iter_jsonl(corpus_dir / "chunks.jsonl", problems):
        where = f"chunks.jsonl:{lineno}"
        if not (_require(rec, "chunkId", str, where, problems)
                and _require(rec, "text", str, where, problems)
                and _require(rec, "sentenceIds", list, where, problems)
                and _require(rec, "imageIds", list, where, problems)):
            continue
        if not rec["sentenceIds"]:
            problems.append(f"{where}: sentenceIds is empty")
        if rec["chunkId"] in chunks:
            problems.append(f"{where}: duplicate chunkId {rec['chunkId']!r}")
        chunks[rec["chunkId"]] = rec

    sentences = {}
    for lineno, rec in _iter_jsonl(corpus_dir / "sentences.jsonl", problems):
        where = f"sentences.jsonl:{lineno}"
        if not (_require(rec, "sentenceId", str, where, problems)
                and _require(rec, "chunkId", str, where, problems)
                and _require(rec, "tokens", list, where, problems)):
            continue
        sid = rec["sentenceId"]
        if sid in sentences:
            problems.append(f"{where}: duplicate sentenceId {sid!r}")
        if rec["chunkId"] not in chunks:
            problems.append(f"{where}: unknown chunkId {rec['chunkId']!r}")
        tokens = rec["tokens"]
        if not tokens:
            problems.append(f"{where}: empty token list")
        ok = True
        for pos, token in enumerate(tokens):
            if not isinstance(token, dict) or not TOKEN_FIELDS <= token.keys():
                problems.append(f"{where}: token {pos} missing fields")
                ok = False
                break
            if token["index"] != pos:
                problems.append(f"{where}: token index {token['index']} != {pos}")
                ok = False
            if not 0 <= token["head"] < len(tokens):
                problems.append(f"{where}: token {pos} head out of range")
                ok = False
        if ok:
            sentences[sid] = rec

    for chunk_id, rec in chunks.items():
        for sid in rec["sentenceIds"]:
            owner = sentences.get(sid)
            if owner is None:
                problems.append(f"chunks.jsonl: chunk {chunk_id!r} references "
                                f"unknown sentence {sid!r}")
            elif owner["chunkId"] != chunk_id:
                problems.append(f"chunks.jsonl: sentence {sid!r} belongs to "
                                f"{owner['chunkId']!r}, not {chunk_id!r}")

    for lineno, rec in _iter_jsonl(corpus_dir / "entities.jsonl", problems):
        where = f"entities.jsonl:{lineno}"
        if not (_require(rec, "sentenceId", str, where, problems)
                and _require(rec, "surface", str, where, problems)
                and _require(rec, "label", str, where, problems)
                and _require(rec, "start", int, where, problems)
                and _require(rec, "end", int, where, problems)
                and _require(rec, "rootIndex", int, where, problems)):
            continue
        owner = sentences.get(rec["sentenceId"])
        if owner is None:
            problems.append(f"{where}: unknown sentenceId {rec['sentenceId']!r}")
            continue
        tokens = owner["tokens"]
        start, end, root = rec["start"], rec["end"], rec["rootIndex"]
        if not (0 <= start <= end < len(tokens)):
            problems.append(f"{where}: span [{start}, {end}] out of range")
            continue
        if not start <= root <= end:
            problems.append(f"{where}: rootIndex {root} outside span")
        span_text = " ".join(tokens[i]["text"] for i in range(start, end + 1))
        if span_text != rec["surface"]:
            problems.append(f"{where}: surface {rec['surface']!r} does not "
                            f"match span text {span_text!r}")

    image_ids = set()
    for lineno, rec in _iter_jsonl(corpus_dir / "images.jsonl", problems):
        where = f"images.jsonl:{lineno}"
        if _require(rec, "imageId", str, where, problems):
            if rec["imageId"] in image_ids:
                problems.append(f"{where}: duplicate imageId {rec['imageId']!r}")
            image_ids.add(rec["imageId"])

    for chunk_id, rec in chunks.items():
        for img in rec["imageIds"]:
            if img not in image_ids:
                problems.append(f"chunks.jsonl: chunk {chunk_id!r} references "
                                f"unknown image {img!r}")

    groundings_path = corpus_dir / "groundings.jsonl"
    if groundings_path.exists():
        for lineno, rec in _iter_jsonl(groundings_path, problems):
            where = f"groundings.jsonl:{lineno}"
            if not (_require(rec, "entityKey", str, where, problems)
                    and _require(rec, "imageId", str, where, problems)
                    and _require(rec, "objectId", str, where, problems)):
                continue
            confidence = rec.get("confidence")
            if not isinstance(confidence, (int, float)) \
                    or isinstance(confidence, bool) \
                    or not 0.0 <= confidence <= 1.0:
                problems.append(f"{where}: confidence must be a number in [0, 1]")
            if rec["imageId"] not in image_ids:
                problems.append(f"{where}: unknown imageId {rec['imageId']!r}")

    return problems
