"""Domain records for the corpus, the parse layer, and the fused graph."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

EXCLUDED_ENTITY_LABELS = frozenset({"ORDINAL", "CARDINAL", "PERCENT", "QUANTITY"})

_WS = re.compile(r"\s+")


def canonical_key(surface: str) -> str:
    """Canonical entity key: case-folded, whitespace-normalized surface form."""
    return _WS.sub(" ", surface.strip()).casefold()


@dataclass(frozen=True)
class DepToken:
    index: int
    text: str
    lemma: str
    pos: str        # coarse tag: VERB, NOUN, ADP, ...
    dep: str        # dependency label: nsubj, dobj, appos, ...
    head: int       # governor index; self-referential at the root


@dataclass(frozen=True)
class EntityMention:
    start: int      # inclusive token span
    end: int
    surface: str
    label: str
    root: int       # index of the span's dependency root token

    @property
    def key(self) -> str:
        return canonical_key(self.surface)


@dataclass(frozen=True)
class ParsedSentence:
    sentence_id: str
    chunk_id: str
    tokens: tuple[DepToken, ...]
    entities: tuple[EntityMention, ...]


@dataclass(frozen=True)
class RelationTriplet:
    subject: str
    predicate: str
    object: str
    sentence_id: str


@dataclass(frozen=True)
class ChunkRecord:
    chunk_id: str
    text: str
    sentence_ids: tuple[str, ...]
    image_ids: tuple[str, ...]


@dataclass(frozen=True)
class GroundingRecord:
    entity_key: str
    image_id: str
    object_id: str
    region_ref: str
    confidence: float


@dataclass
class MultimodalNode:
    node_id: str
    entity_key: str
    object_ids: set[str] = field(default_factory=set)
    source_chunk_ids: set[str] = field(default_factory=set)
