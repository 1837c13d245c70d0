"""Shared fixtures: raw documents and detection rows for the adapters."""

import json

import pytest

GOLDEN_DOCS = [
    {"docId": "d1", "text": "Steve Jobs founded Apple.", "imageIds": ["img1"]},
    {"docId": "d2", "text": "Apple was founded by Steve Jobs.",
     "imageIds": ["img2"]},
    {"docId": "d3", "text": "Apple operates in California.",
     "imageIds": ["img3"]},
    {"docId": "d4", "text": "Paris, the capital of France.",
     "imageIds": ["img4"]},
    {"docId": "d5", "text": "Google headquarters in Mountain View.",
     "imageIds": ["img5"]},
]

DETECTION_ROWS = [
    {"entity": "Apple", "imageId": "img1", "objectId": "o1",
     "score": 0.9, "region": "r1"},
    {"entity": "  Steve   Jobs ", "imageId": "img2", "objectId": "o2",
     "score": 0.8},
    {"entity": "Paris", "imageId": "img4", "objectId": "o3",
     "score": 0.7, "region": "r3"},
]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


@pytest.fixture
def docs_path(tmp_path):
    path = tmp_path / "docs.jsonl"
    write_jsonl(path, GOLDEN_DOCS)
    return path


@pytest.fixture
def detections_path(tmp_path):
    path = tmp_path / "detections.jsonl"
    write_jsonl(path, DETECTION_ROWS)
    return path


@pytest.fixture
def parsed_corpus(tmp_path, docs_path, detections_path):
    """A full corpus directory: parses plus converted groundings."""
    from mggraph_adapters.groundings import convert_groundings
    from mggraph_adapters.parsing import HeuristicBackend, export_parses, read_docs

    corpus_dir = tmp_path / "corpus"
    export_parses(read_docs(docs_path), corpus_dir, HeuristicBackend())
    written, errors = convert_groundings(
        detections_path, corpus_dir / "groundings.jsonl")
    assert errors == []
    assert written == len(DETECTION_ROWS)
    return corpus_dir
