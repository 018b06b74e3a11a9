"""Unit-hypersphere embedding space: angular distances, angular means, vector IO.

All vectors live on the unit hypersphere; dissimilarity between two vectors is
their angular distance arccos(a.b) in [0, pi]. Vectors are stored as float32
(encoder precision) while all distance arithmetic runs in float64.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import (
    DegenerateMeanError,
    DimensionMismatchError,
    DuplicateIdError,
    EmbedCountError,
    EmbedDimensionError,
    EmbedStatusError,
    EmbedTransportError,
    VectorFormatError,
)

# Norms below this are treated as a degenerate (zero) vector sum.
_ZERO_NORM_TOL = 1e-12
# Rows already unit within this tolerance pass through bit-unchanged, so
# re-wrapping stored float32 vectors is idempotent.
_UNIT_TOL = 1e-6

_BINARY_MAGIC = b"DDEM"
_BINARY_VERSION = 1


def _as_unit_f32(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate, L2-normalize and downcast a raw vector to float32."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"vector must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite entries")
    norm = float(np.linalg.norm(arr))
    if norm < _ZERO_NORM_TOL:
        raise DegenerateMeanError("cannot normalize a zero-norm vector")
    if abs(norm - 1.0) > _UNIT_TOL:
        arr = arr / norm
    return arr.astype(np.float32)


@dataclass(frozen=True)
class EmbeddingVector:
    """A single unit-norm vector. Normalized on construction."""

    values: np.ndarray

    def __init__(self, values: Sequence[float] | np.ndarray):
        object.__setattr__(self, "values", _as_unit_f32(values))

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Id-indexed unit vectors; one row per id, all rows the same dimension."""

    ids: tuple[str, ...]
    vectors: np.ndarray  # (N, D) float32, unit rows
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __init__(self, ids: Iterable[str], vectors: np.ndarray | Sequence[Sequence[float]]):
        ids = tuple(ids)
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array of vectors, got shape {arr.shape}")
        if len(ids) != arr.shape[0]:
            raise ValueError(f"{len(ids)} ids for {arr.shape[0]} vector rows")
        index: dict[str, int] = {}
        for i, item_id in enumerate(ids):
            if item_id in index:
                raise DuplicateIdError(item_id)
            index[item_id] = i
        if not np.all(np.isfinite(arr)):
            raise ValueError("vectors contain non-finite entries")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(norms < _ZERO_NORM_TOL):
            raise ValueError("vectors contain a zero-norm row")
        scale = np.where(np.abs(norms - 1.0) > _UNIT_TOL, norms, 1.0)
        unit = (arr / scale[:, None]).astype(np.float32)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "vectors", unit)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def row(self, item_id: str) -> EmbeddingVector:
        try:
            i = self._index[item_id]
        except KeyError:
            from .errors import UnknownIdError

            raise UnknownIdError(item_id) from None
        return EmbeddingVector(self.vectors[i])

    def index_of(self, item_id: str) -> int:
        try:
            return self._index[item_id]
        except KeyError:
            from .errors import UnknownIdError

            raise UnknownIdError(item_id) from None

    def subset(self, ids: Sequence[str]) -> "EmbeddingMatrix":
        rows = [self.index_of(i) for i in ids]
        return EmbeddingMatrix(ids, self.vectors[rows])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.ids == other.ids and bool(np.array_equal(self.vectors, other.vectors))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Cached symmetric pairwise angular distances in radians."""

    ids: tuple[str, ...]
    d: np.ndarray  # (N, N) float64, zero diagonal, symmetric, entries in [0, pi]

    def __init__(self, ids: Iterable[str], d: np.ndarray):
        ids = tuple(ids)
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (len(ids), len(ids)):
            raise ValueError(f"distance matrix shape {d.shape} does not match {len(ids)} ids")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "d", d)

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, indices: Sequence[int]) -> "DistanceMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        return DistanceMatrix([self.ids[i] for i in indices], self.d[np.ix_(idx, idx)])


def angular_distance(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """arccos of the dot product, clamped to [-1, 1] to absorb rounding.

    Identical vectors short-circuit to 0: a float32 unit vector's self-dot
    can land just below 1, and arccos is ill-conditioned there.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimensions differ: {a.dim} vs {b.dim}")
    if np.array_equal(a.values, b.values):
        return 0.0
    dot = float(np.dot(a.values.astype(np.float64), b.values.astype(np.float64)))
    return math.acos(max(-1.0, min(1.0, dot)))


def row_distances(vectors: np.ndarray) -> np.ndarray:
    """Angular distance matrix over unit rows (float32 in, float64 out).

    Bit-identical rows get distance exactly 0: a float32 unit row's self-dot
    can land just below 1, and arccos would turn that into a spurious ~1e-3.
    """
    v = np.asarray(vectors)
    gram = v.astype(np.float64) @ v.astype(np.float64).T
    # Force exact symmetry before arccos; BLAS summation order is not symmetric.
    gram = (gram + gram.T) / 2.0
    np.clip(gram, -1.0, 1.0, out=gram)
    d = np.arccos(gram)
    np.fill_diagonal(d, 0.0)
    _, labels = np.unique(v, axis=0, return_inverse=True)
    d[labels[:, None] == labels[None, :]] = 0.0
    return d


def pairwise_distances(m: EmbeddingMatrix) -> DistanceMatrix:
    """Full symmetric matrix of angular distances between all rows."""
    if len(m) < 1:
        raise ValueError("need at least one row")
    return DistanceMatrix(m.ids, row_distances(m.vectors))


def angular_mean(vs: Sequence[EmbeddingVector]) -> EmbeddingVector:
    """Normalized vector sum; raises DegenerateMeanError on a zero-norm sum."""
    if not vs:
        raise ValueError("angular_mean of an empty set")
    dim = vs[0].dim
    total = np.zeros(dim, dtype=np.float64)
    for v in vs:
        if v.dim != dim:
            raise DimensionMismatchError(f"dimensions differ: {dim} vs {v.dim}")
        total += v.values.astype(np.float64)
    norm = float(np.linalg.norm(total))
    if norm < _ZERO_NORM_TOL:
        raise DegenerateMeanError("vector sum has zero norm (e.g. antipodal pair)")
    return EmbeddingVector(total / norm)


def mean_rows(vectors: np.ndarray) -> np.ndarray:
    """Angular mean over the rows of a unit-vector array, as a float32 unit row."""
    total = vectors.astype(np.float64).sum(axis=0)
    norm = float(np.linalg.norm(total))
    if norm < _ZERO_NORM_TOL:
        raise DegenerateMeanError("vector sum has zero norm (e.g. antipodal pair)")
    return (total / norm).astype(np.float32)


# ---------------------------------------------------------------------------
# Vector file IO
#
# JSONL: one {"id": str, "vector": [float, ...]} object per line.
# Binary: magic "DDEM", u32 LE version=1, u32 row count, u32 dim, rows of
# f32 LE, then the ids as newline-separated UTF-8.
# ---------------------------------------------------------------------------


def store_vectors(m: EmbeddingMatrix, path: str | Path, format: str = "auto") -> None:
    """Write a matrix as JSONL or binary; "auto" picks binary for .bin/.ddem."""
    path = Path(path)
    if format == "auto":
        format = "binary" if path.suffix in (".bin", ".ddem") else "jsonl"
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for item_id, row in zip(m.ids, m.vectors):
                fh.write(json.dumps({"id": item_id, "vector": [float(x) for x in row]}) + "\n")
    elif format == "binary":
        if any("\n" in item_id for item_id in m.ids):
            raise ValueError("binary format cannot store ids containing newlines")
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(struct.pack("<III", _BINARY_VERSION, len(m), m.dim))
            fh.write(m.vectors.astype("<f4").tobytes())
            fh.write("\n".join(m.ids).encode("utf-8"))
    else:
        raise ValueError(f"unknown vector format: {format!r}")


def load_vectors(path: str | Path) -> EmbeddingMatrix:
    """Load a JSONL or binary vector file, sniffing the format by magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == _BINARY_MAGIC:
        return _load_binary(path)
    return _load_jsonl(path)


def _load_jsonl(path: Path) -> EmbeddingMatrix:
    ids: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                item_id = obj["id"]
                vector = obj["vector"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise VectorFormatError(f"{path}:{line_no}: bad vector line ({exc})") from exc
            if not isinstance(item_id, str) or not isinstance(vector, list):
                raise VectorFormatError(f"{path}:{line_no}: id must be str and vector a list")
            if dim is None:
                dim = len(vector)
            elif len(vector) != dim:
                raise VectorFormatError(
                    f"{path}:{line_no}: dimension {len(vector)} != {dim} of earlier rows"
                )
            ids.append(item_id)
            rows.append(vector)
    if not ids:
        raise VectorFormatError(f"{path}: no vector rows")
    return EmbeddingMatrix(ids, np.asarray(rows, dtype=np.float64))


def _load_binary(path: Path) -> EmbeddingMatrix:
    blob = Path(path).read_bytes()
    if blob[:4] != _BINARY_MAGIC:
        raise VectorFormatError(f"{path}: unknown magic bytes {blob[:4]!r}")
    if len(blob) < 16:
        raise VectorFormatError(f"{path}: truncated header")
    version, count, dim = struct.unpack("<III", blob[4:16])
    if version != _BINARY_VERSION:
        raise VectorFormatError(f"{path}: unsupported version {version}")
    payload_end = 16 + count * dim * 4
    if len(blob) < payload_end:
        raise VectorFormatError(f"{path}: truncated vector payload")
    vectors = np.frombuffer(blob[16:payload_end], dtype="<f4").reshape(count, dim)
    ids = blob[payload_end:].decode("utf-8").split("\n")
    if len(ids) != count:
        raise VectorFormatError(f"{path}: id table has {len(ids)} entries for {count} rows")
    return EmbeddingMatrix(ids, vectors)


# ---------------------------------------------------------------------------
# Embedder service client (wire contract: POST /embed {"texts": [...]}
# -> 200 {"vectors": [[...], ...]}).
# ---------------------------------------------------------------------------


def fetch_embeddings(
    texts: Sequence[str],
    endpoint: str,
    ids: Sequence[str] | None = None,
    batch_size: int = 512,
    timeout: float = 60.0,
) -> EmbeddingMatrix:
    """Fetch one vector per text from an embedder service, order-preserving.

    Vectors are normalized client-side, so the service is free to return
    non-unit vectors. Requests are chunked to `batch_size` texts.
    """
    if ids is None:
        ids = [str(i) for i in range(len(texts))]
    if len(ids) != len(texts):
        raise ValueError(f"{len(ids)} ids for {len(texts)} texts")
    url = endpoint.rstrip("/") + "/embed"
    rows: list[list[float]] = []
    dim: int | None = None
    for start in range(0, len(texts), batch_size):
        batch = list(texts[start : start + batch_size])
        try:
            resp = requests.post(url, json={"texts": batch}, timeout=timeout)
        except requests.RequestException as exc:
            raise EmbedTransportError(f"cannot reach embedder at {url}: {exc}") from exc
        if resp.status_code != 200:
            raise EmbedStatusError(resp.status_code, resp.text[:200])
        try:
            vectors = resp.json()["vectors"]
        except (ValueError, KeyError) as exc:
            raise EmbedStatusError(200, f"malformed response body: {exc}") from exc
        if len(vectors) != len(batch):
            raise EmbedCountError(expected=len(batch), got=len(vectors))
        for vec in vectors:
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise EmbedDimensionError(f"vector of dimension {len(vec)}, expected {dim}")
        rows.extend(vectors)
    if not rows:
        raise ValueError("no texts to embed")
    return EmbeddingMatrix(ids, np.asarray(rows, dtype=np.float64))
