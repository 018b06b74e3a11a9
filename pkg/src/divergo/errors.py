"""Exception types raised across the divergo pipeline.

Every error the library raises deliberately derives from DivergoError so the
CLI can map failures to a single machine-readable line and exit code 1.
"""

from __future__ import annotations


class DivergoError(Exception):
    """Base class for all divergo errors."""


class CorpusFormatError(DivergoError):
    """A corpus or tagged-sentence file line could not be parsed."""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class DuplicateIdError(DivergoError):
    """The same id appeared twice in a corpus or vector file."""

    def __init__(self, duplicate_id: str):
        self.duplicate_id = duplicate_id
        super().__init__(f"duplicate id: {duplicate_id!r}")


class DimensionMismatchError(DivergoError):
    """Vectors of different dimensions were combined."""


class VectorFormatError(DivergoError):
    """A vector file is malformed (bad magic, inconsistent rows, bad JSON)."""


class DegenerateMeanError(DivergoError):
    """The vector sum has zero norm, so the angular mean is undefined."""


class EmbedServiceError(DivergoError):
    """Base class for embedder-service client failures."""


class EmbedTransportError(EmbedServiceError):
    """The embedder endpoint could not be reached."""


class EmbedStatusError(EmbedServiceError):
    """The embedder endpoint returned a non-success HTTP status."""

    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"embedder returned status {status}" + (f": {detail}" if detail else ""))


class EmbedCountError(EmbedServiceError):
    """The embedder returned a different number of vectors than texts sent."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} vectors, got {got}")


class EmbedDimensionError(EmbedServiceError):
    """The embedder returned vectors of inconsistent dimension."""


class InsufficientSurvivorsError(DivergoError):
    """Repeller exclusion left fewer phrases than the requested selection size."""

    def __init__(self, survivors: int, requested: int):
        self.survivors = survivors
        self.requested = requested
        super().__init__(f"only {survivors} phrases survive exclusion, need {requested}")


class UnknownIdError(DivergoError):
    """An id was referenced that is not present in the embedding matrix."""

    def __init__(self, missing_id: str):
        self.missing_id = missing_id
        super().__init__(f"unknown id: {missing_id!r}")


class UndefinedRatioError(DivergoError):
    """A token-overlap ratio has an empty denominator (all tokens filtered)."""
