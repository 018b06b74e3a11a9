"""Shared test setup: single-threaded BLAS and a stub embedder service."""

import os

# Pin BLAS to one thread before numpy loads: the performance acceptance
# criterion is specified single-threaded, and results stay reproducible.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import hashlib
import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable


def _hash_vector(text: str, dim: int = 8) -> list[float]:
    """Deterministic pseudo-embedding for stub responses."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    row = rng.standard_normal(dim)
    return [float(x) for x in row / np.linalg.norm(row)]


class _StubHandler(BaseHTTPRequestHandler):
    """Configurable /embed endpoint: mode set per-server via self.server.mode."""

    def do_POST(self):
        if self.path != "/embed":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        texts = body["texts"]
        self.server.request_batches.append(len(texts))
        mode = self.server.mode
        if mode == "error500":
            self.send_error(500, "boom")
            return
        vectors = [_hash_vector(t) for t in texts]
        if mode == "drop_one" and vectors:
            vectors = vectors[:-1]
        elif mode == "unnormalized":
            vectors = [[x * 3.5 for x in v] for v in vectors]
        elif mode == "ragged" and len(vectors) > 1:
            vectors[-1] = vectors[-1][:-1]
        payload = json.dumps({"vectors": vectors}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # keep test output clean
        pass


@pytest.fixture
def stub_embedder():
    """Runs the stub embed service; yields (base_url, server) for mode tweaks."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.mode = "ok"
    server.request_batches = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}", server
    finally:
        server.shutdown()
        thread.join(timeout=5)
        server.server_close()
