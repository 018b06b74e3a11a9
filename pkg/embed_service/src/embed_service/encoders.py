"""Sentence encoders the service can load by name.

The default `hash-<dim>` encoder is a dependency-free character n-gram
feature-hashing encoder: deterministic across processes, identical texts map
to identical vectors, and every vector is unit-norm. Any other name is
treated as a sentence-transformers model and needs the `transformers` extra
installed (plus the model weights available locally or downloadable).
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

DEFAULT_MODEL = "hash-256"

_HASH_NAME = re.compile(r"^hash(?:-(\d+))?$")


class EncoderLoadError(Exception):
    """The requested encoder cannot be constructed."""


class Encoder(Protocol):
    name: str
    dim: int

    def encode(self, texts: Sequence[str]) -> list[list[float]]: ...


class HashingEncoder:
    """Character n-gram feature hashing with signed buckets, L2-normalized.

    Texts are lowercased, wrapped in boundary markers, and decomposed into
    character 2-/3-/4-grams; each gram hashes (blake2b, process-independent)
    to a signed bucket. The boundary markers guarantee at least one gram, so
    no text maps to the zero vector.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise EncoderLoadError(f"hash encoder dimension must be >= 1, got {dim}")
        self.dim = dim
        self.name = f"hash-{dim}"

    def _grams(self, text: str) -> list[str]:
        padded = f"\x02{text.lower()}\x03"
        grams = []
        for size in (2, 3, 4):
            grams.extend(padded[i : i + size] for i in range(len(padded) - size + 1))
        return grams

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        rows = []
        for text in texts:
            vec = np.zeros(self.dim)
            for gram in self._grams(text):
                h = int.from_bytes(
                    hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little"
                )
                vec[h % self.dim] += 1.0 if h >> 63 == 0 else -1.0
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:  # signed buckets cancelled out; keep the vector valid
                vec[0] = 1.0
                norm = 1.0
            rows.append([float(x) for x in vec / norm])
        return rows


class SentenceTransformerEncoder:
    """Wraps a sentence-transformers model; needs the `transformers` extra."""

    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderLoadError(
                f"model {name!r} needs sentence-transformers "
                f"(install the 'transformers' extra): {exc}"
            ) from exc
        try:
            self._model = SentenceTransformer(name)
        except Exception as exc:  # model resolution/download/load failures
            raise EncoderLoadError(f"cannot load sentence encoder {name!r}: {exc}") from exc
        self.name = name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        if not texts:
            return []
        rows = np.asarray(self._model.encode(list(texts)), dtype=np.float64)
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return [[float(x) for x in row] for row in rows / norms]


def load_encoder(name: str = DEFAULT_MODEL) -> Encoder:
    """Construct the encoder for a model name; EncoderLoadError on failure."""
    match = _HASH_NAME.match(name)
    if match:
        return HashingEncoder(int(match.group(1) or 256))
    return SentenceTransformerEncoder(name)
