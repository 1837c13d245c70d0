"""Shared fixtures: hand-built dependency parses and corpus writers."""

from __future__ import annotations

import json

import numpy as np
import pytest

from mggraph.model import DepToken, EntityMention, ParsedSentence


def tok(index, text, lemma, pos, dep, head):
    return DepToken(index, text, lemma, pos, dep, head)


def sentence_founded(sid="s1", chunk="c1"):
    """Steve Jobs founded Apple."""
    return ParsedSentence(
        sid, chunk,
        tokens=(
            tok(0, "Steve", "steve", "PROPN", "compound", 1),
            tok(1, "Jobs", "jobs", "PROPN", "nsubj", 2),
            tok(2, "founded", "found", "VERB", "ROOT", 2),
            tok(3, "Apple", "apple", "PROPN", "dobj", 2),
        ),
        entities=(
            EntityMention(0, 1, "Steve Jobs", "PERSON", 1),
            EntityMention(3, 3, "Apple", "ORG", 3),
        ),
    )


def sentence_passive(sid="s2", chunk="c1"):
    """Apple was founded by Steve Jobs."""
    return ParsedSentence(
        sid, chunk,
        tokens=(
            tok(0, "Apple", "apple", "PROPN", "nsubjpass", 2),
            tok(1, "was", "be", "AUX", "auxpass", 2),
            tok(2, "founded", "found", "VERB", "ROOT", 2),
            tok(3, "by", "by", "ADP", "agent", 2),
            tok(4, "Steve", "steve", "PROPN", "compound", 5),
            tok(5, "Jobs", "jobs", "PROPN", "pobj", 3),
        ),
        entities=(
            EntityMention(0, 0, "Apple", "ORG", 0),
            EntityMention(4, 5, "Steve Jobs", "PERSON", 5),
        ),
    )


def sentence_operates(sid="s3", chunk="c2"):
    """Apple operates in California."""
    return ParsedSentence(
        sid, chunk,
        tokens=(
            tok(0, "Apple", "apple", "PROPN", "nsubj", 1),
            tok(1, "operates", "operate", "VERB", "ROOT", 1),
            tok(2, "in", "in", "ADP", "prep", 1),
            tok(3, "California", "california", "PROPN", "pobj", 2),
        ),
        entities=(
            EntityMention(0, 0, "Apple", "ORG", 0),
            EntityMention(3, 3, "California", "GPE", 3),
        ),
    )


def sentence_appos(sid="s4", chunk="c2"):
    """Paris, the capital of France."""
    return ParsedSentence(
        sid, chunk,
        tokens=(
            tok(0, "Paris", "paris", "PROPN", "ROOT", 0),
            tok(1, ",", ",", "PUNCT", "punct", 0),
            tok(2, "the", "the", "DET", "det", 3),
            tok(3, "capital", "capital", "NOUN", "appos", 0),
            tok(4, "of", "of", "ADP", "prep", 3),
            tok(5, "France", "france", "PROPN", "pobj", 4),
        ),
        entities=(
            EntityMention(0, 0, "Paris", "GPE", 0),
            EntityMention(5, 5, "France", "GPE", 5),
        ),
    )


def sentence_headquarters(sid="s5", chunk="c3"):
    """Google headquarters in Mountain View."""
    return ParsedSentence(
        sid, chunk,
        tokens=(
            tok(0, "Google", "google", "PROPN", "compound", 1),
            tok(1, "headquarters", "headquarters", "NOUN", "ROOT", 1),
            tok(2, "in", "in", "ADP", "prep", 1),
            tok(3, "Mountain", "mountain", "PROPN", "compound", 4),
            tok(4, "View", "view", "PROPN", "pobj", 2),
        ),
        entities=(
            EntityMention(0, 1, "Google headquarters", "ORG", 1),
            EntityMention(3, 4, "Mountain View", "GPE", 4),
        ),
    )


def sentence_negated(sid="s6", chunk="c3"):
    """Steve Jobs did not found Apple."""
    return ParsedSentence(
        sid, chunk,
        tokens=(
            tok(0, "Steve", "steve", "PROPN", "compound", 1),
            tok(1, "Jobs", "jobs", "PROPN", "nsubj", 4),
            tok(2, "did", "do", "AUX", "aux", 4),
            tok(3, "not", "not", "PART", "neg", 4),
            tok(4, "found", "found", "VERB", "ROOT", 4),
            tok(5, "Apple", "apple", "PROPN", "dobj", 4),
        ),
        entities=(
            EntityMention(0, 1, "Steve Jobs", "PERSON", 1),
            EntityMention(5, 5, "Apple", "ORG", 5),
        ),
    )


GOLDEN_BUILDERS = [
    sentence_founded,
    sentence_passive,
    sentence_operates,
    sentence_appos,
    sentence_headquarters,
]


@pytest.fixture
def golden_sentences():
    return [build() for build in GOLDEN_BUILDERS]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def sentence_record(sentence: ParsedSentence) -> dict:
    return {
        "sentenceId": sentence.sentence_id,
        "chunkId": sentence.chunk_id,
        "tokens": [
            {"index": t.index, "text": t.text, "lemma": t.lemma,
             "pos": t.pos, "dep": t.dep, "head": t.head}
            for t in sentence.tokens
        ],
    }


def entity_records(sentence: ParsedSentence) -> list[dict]:
    return [
        {"sentenceId": sentence.sentence_id, "start": e.start, "end": e.end,
         "surface": e.surface, "label": e.label, "rootIndex": e.root}
        for e in sentence.entities
    ]


def write_corpus(corpus_dir, chunks, sentences, images, groundings):
    """Write the ingestion contract for a corpus of ParsedSentence fixtures."""
    corpus_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(corpus_dir / "chunks.jsonl", chunks)
    write_jsonl(corpus_dir / "sentences.jsonl", [sentence_record(s) for s in sentences])
    entities = []
    for s in sentences:
        entities.extend(entity_records(s))
    write_jsonl(corpus_dir / "entities.jsonl", entities)
    write_jsonl(corpus_dir / "images.jsonl", [{"imageId": i} for i in images])
    write_jsonl(corpus_dir / "groundings.jsonl", groundings)


def simple_sentence(sid, chunk, words, entity_words):
    """A minimal flat parse: first token is the root, others attach to it.

    Good enough for corpus-level tests that only need entity mentions.
    """
    tokens = tuple(
        tok(i, w, w.lower(), "PROPN" if w in entity_words else "NOUN",
            "ROOT" if i == 0 else "dep", 0 if i > 0 else 0)
        for i, w in enumerate(words)
    )
    entities = tuple(
        EntityMention(i, i, w, "ENT", i) for i, w in enumerate(words) if w in entity_words
    )
    return ParsedSentence(sid, chunk, tokens, entities)


@pytest.fixture
def small_corpus(tmp_path):
    """3 chunks, 4 images, golden sentences plus groundings."""
    sentences = [
        sentence_founded("s1", "c1"),
        sentence_passive("s2", "c1"),
        sentence_operates("s3", "c2"),
        sentence_appos("s4", "c2"),
        sentence_headquarters("s5", "c3"),
    ]
    chunks = [
        {"chunkId": "c1", "text": "Steve Jobs founded Apple. Apple was founded by Steve Jobs.",
         "sentenceIds": ["s1", "s2"], "imageIds": ["img1", "img2"]},
        {"chunkId": "c2", "text": "Apple operates in California. Paris, the capital of France.",
         "sentenceIds": ["s3", "s4"], "imageIds": ["img3"]},
        {"chunkId": "c3", "text": "Google headquarters in Mountain View.",
         "sentenceIds": ["s5"], "imageIds": ["img4"]},
    ]
    groundings = [
        {"entityKey": "apple", "imageId": "img1", "objectId": "o1",
         "regionRef": "r1", "confidence": 0.9},
        {"entityKey": "apple", "imageId": "img2", "objectId": "o2",
         "regionRef": "r2", "confidence": 0.3},
        {"entityKey": "paris", "imageId": "img3", "objectId": "o3",
         "regionRef": "r3", "confidence": 0.7},
    ]
    corpus_dir = tmp_path / "corpus"
    write_corpus(corpus_dir, chunks, sentences, ["img1", "img2", "img3", "img4"], groundings)
    return corpus_dir


def planted_corpus(corpus_dir, n_chunks=50, dim=64, seed=7):
    """Synthetic corpus where chunk i is planted to match query i exactly.

    Returns (corpus_dir, queries, gold, overrides) where overrides plant
    provider vectors: query i, chunk i's text, and chunk i's sentence all
    embed to the same orthonormal direction.
    """
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.standard_normal((dim, dim)))[0].T

    chunks, sentences, groundings, images = [], [], [], []
    overrides = {}
    queries, gold = {}, {}
    for i in range(n_chunks):
        cid = f"c{i:03d}"
        sid = f"s{i:03d}"
        img = f"img{i:03d}"
        ent_a, ent_b = f"Topic{i}A", f"Topic{i}B"
        words = [ent_a, "relates", "to", ent_b]
        text = " ".join(words)
        sentence = ParsedSentence(
            sid, cid,
            tokens=(
                tok(0, ent_a, ent_a.lower(), "PROPN", "nsubj", 1),
                tok(1, "relates", "relate", "VERB", "ROOT", 1),
                tok(2, "to", "to", "ADP", "prep", 1),
                tok(3, ent_b, ent_b.lower(), "PROPN", "pobj", 2),
            ),
            entities=(
                EntityMention(0, 0, ent_a, "ENT", 0),
                EntityMention(3, 3, ent_b, "ENT", 3),
            ),
        )
        sentences.append(sentence)
        chunks.append({"chunkId": cid, "text": text,
                       "sentenceIds": [sid], "imageIds": [img]})
        images.append(img)
        groundings.append({"entityKey": ent_a.lower(), "imageId": img,
                           "objectId": f"o{i:03d}", "regionRef": "",
                           "confidence": 0.8})
        if i < 20:
            direction = basis[i].astype(np.float32)
            query_text = f"what is known about topic {i}?"
            overrides["text:" + query_text] = direction
            overrides["text:" + text] = direction
            queries[f"q{i:02d}"] = query_text
            gold[f"q{i:02d}"] = {cid}
    write_corpus(corpus_dir, chunks, sentences, images, groundings)
    return queries, gold, overrides
