"""Convert external region-detection rows into the groundings contract.

Input rows are one JSON object per line with at least an entity surface,
an image id, an object id, and a confidence score.  A few common field
spellings are accepted (entity/entityKey, score/confidence,
region/regionRef).  Entity surfaces are canonicalized the same way the
downstream graph keys its nodes: casefolded with collapsed whitespace.
"""

from __future__ import annotations

import json
from pathlib import Path


def canonical_entity_key(surface: str) -> str:
    return " ".join(surface.casefold().split())


def _pick(record: dict, *names):
    for name in names:
        if name in record:
            return record[name]
    return None


def convert_rows(rows) -> tuple[list[dict], list[tuple[int, str]]]:
    """Normalize (lineno, record) pairs; collect per-line errors.

    Returns (records, errors) where each error is (lineno, message).
    Rows missing a confidence score or with one outside [0, 1] are
    rejected, never silently defaulted.
    """
    records: list[dict] = []
    errors: list[tuple[int, str]] = []
    for lineno, rec in rows:
        entity = _pick(rec, "entityKey", "entity", "label")
        image_id = _pick(rec, "imageId", "image")
        object_id = _pick(rec, "objectId", "object")
        confidence = _pick(rec, "confidence", "score")
        region = _pick(rec, "regionRef", "region") or ""

        if not isinstance(entity, str) or not entity.strip():
            errors.append((lineno, "missing entity surface"))
            continue
        if not isinstance(image_id, str) or not image_id:
            errors.append((lineno, "missing imageId"))
            continue
        if not isinstance(object_id, str) or not object_id:
            errors.append((lineno, "missing objectId"))
            continue
        if not isinstance(confidence, (int, float)) or isinstance(confidence, bool):
            errors.append((lineno, "missing or non-numeric confidence"))
            continue
        if not 0.0 <= float(confidence) <= 1.0:
            errors.append((lineno, f"confidence {confidence} outside [0, 1]"))
            continue

        records.append({
            "entityKey": canonical_entity_key(entity),
            "imageId": image_id,
            "objectId": object_id,
            "regionRef": str(region),
            "confidence": float(confidence),
        })
    return records, errors


def convert_groundings(input_path, output_path) -> tuple[int, list[tuple[int, str]]]:
    """Read detection rows from a JSONL file and write groundings.jsonl."""
    rows = []
    errors: list[tuple[int, str]] = []
    with open(input_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append((lineno, json.loads(line)))
            except json.JSONDecodeError as exc:
                errors.append((lineno, f"invalid JSON: {exc.msg}"))
    records, row_errors = convert_rows(rows)
    errors.extend(row_errors)
    errors.sort()

    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return len(records), errors
