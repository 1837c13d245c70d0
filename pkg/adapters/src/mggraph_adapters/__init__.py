"""Ingestion adapters producing the corpus file contract for mggraph."""

from .embeddings import (
    EndpointEncoder,
    SyntheticEncoder,
    export_embeddings,
    read_mgem,
    write_mgem,
)
from .groundings import canonical_entity_key, convert_groundings, convert_rows
from .parsing import (
    HeuristicBackend,
    SpacyBackend,
    export_parses,
    make_backend,
    read_docs,
)
from .validate import validate_corpus

__version__ = "0.1.0"

__all__ = [
    "EndpointEncoder",
    "SyntheticEncoder",
    "HeuristicBackend",
    "SpacyBackend",
    "canonical_entity_key",
    "convert_groundings",
    "convert_rows",
    "export_embeddings",
    "export_parses",
    "make_backend",
    "read_docs",
    "read_mgem",
    "validate_corpus",
    "write_mgem",
    "__version__",
]
