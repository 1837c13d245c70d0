"""Exception types shared across the engine."""


class MGGraphError(Exception):
    """Base class for all engine errors."""


class SchemaError(MGGraphError):
    """An ingestion file failed validation."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class MalformedTree(MGGraphError):
    """Dependency head links contain a cycle or escape the sentence."""


class DanglingReference(MGGraphError):
    """An id referenced during graph assembly does not resolve."""


class DimensionMismatch(MGGraphError):
    """Vector dimensionality disagrees with the index."""


class ZeroVector(MGGraphError):
    """A provider returned the zero vector; normalization is undefined."""


class ProviderFailure(MGGraphError):
    """The embedding provider failed for a specific element."""

    def __init__(self, element_id, message):
        self.element_id = element_id
        super().__init__(f"provider failed for {element_id!r}: {message}")


class EmptyQuery(MGGraphError):
    """Neither a text nor an image query was supplied."""


class AllZeroActivation(MGGraphError):
    """No graph node received any seed mass; caller should fall back to dense ranking."""


class UnknownChunkId(MGGraphError):
    """A gold chunk id is absent from the index."""


class CorruptIndex(MGGraphError):
    """An index file is missing, truncated, or inconsistent."""

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{path}: {message}")
