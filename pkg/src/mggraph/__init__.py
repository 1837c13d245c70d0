"""mggraph: multi-granularity multimodal knowledge-graph retrieval engine."""

from .config import DEFAULT_CONFIG, PRESETS, LevelTopK, RetrievalConfig, preset
from .graph import HeteroGraph, build_graph
from .ingestion import Corpus, load_corpus
from .model import (
    ChunkRecord,
    DepToken,
    EntityMention,
    GroundingRecord,
    MultimodalNode,
    ParsedSentence,
    RelationTriplet,
    canonical_key,
)
from .relations import extract_relations
from .retrieval import Query, run_query

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONFIG",
    "PRESETS",
    "LevelTopK",
    "RetrievalConfig",
    "preset",
    "HeteroGraph",
    "build_graph",
    "Corpus",
    "load_corpus",
    "ChunkRecord",
    "DepToken",
    "EntityMention",
    "GroundingRecord",
    "MultimodalNode",
    "ParsedSentence",
    "RelationTriplet",
    "canonical_key",
    "extract_relations",
    "Query",
    "run_query",
]
