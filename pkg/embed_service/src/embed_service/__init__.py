"""Embedder sidecar: serves sentence vectors over the /embed wire contract."""

__version__ = "0.1.0"

from .encoders import (
    DEFAULT_MODEL,
    Encoder,
    EncoderLoadError,
    HashingEncoder,
    SentenceTransformerEncoder,
    load_encoder,
)
from .server import MAX_BATCH, main, make_server, serve

__all__ = [
    "DEFAULT_MODEL",
    "Encoder",
    "EncoderLoadError",
    "HashingEncoder",
    "MAX_BATCH",
    "SentenceTransformerEncoder",
    "load_encoder",
    "main",
    "make_server",
    "serve",
    "__version__",
]
