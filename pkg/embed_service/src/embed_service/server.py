"""HTTP embedder service.

Wire contract:
    POST /embed {"texts": [...]}  -> 200 {"vectors": [[...], ...]}
    GET  /health                  -> 200 {"status": "ok", "dim": D}

One vector per text, in order, L2-normalized. Batches above MAX_BATCH texts
are refused with status 413. The encoder is loaded once at startup; request
handling is stateless and safe under the threading server.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .encoders import DEFAULT_MODEL, Encoder, EncoderLoadError, load_encoder

MAX_BATCH = 1024


class _Handler(BaseHTTPRequestHandler):
    server_version = f"embed-service/{__version__}"
    protocol_version = "HTTP/1.1"

    def _send_json(self, status: int, obj: dict) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _fail(self, status: int, detail: str) -> None:
        self._send_json(status, {"error": detail})

    def do_GET(self) -> None:
        if self.path != "/health":
            self._fail(404, f"unknown path {self.path}")
            return
        self._send_json(200, {"status": "ok", "dim": self.server.encoder.dim})

    def do_POST(self) -> None:
        if self.path != "/embed":
            self._fail(404, f"unknown path {self.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length))
            texts = body["texts"]
        except (ValueError, KeyError, TypeError) as exc:
            self._fail(400, f"expected a JSON body with a 'texts' list: {exc}")
            return
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            self._fail(400, "'texts' must be a list of strings")
            return
        if len(texts) > MAX_BATCH:
            self._fail(413, f"batch of {len(texts)} texts exceeds the {MAX_BATCH} limit")
            return
        self._send_json(200, {"vectors": self.server.encoder.encode(texts)})

    def log_message(self, *args) -> None:  # stay quiet; stdout is for the CLI
        pass


def make_server(host: str, port: int, encoder: Encoder) -> ThreadingHTTPServer:
    """Bound, ready-to-serve HTTP server (port 0 picks a free port)."""
    server = ThreadingHTTPServer((host, port), _Handler)
    server.encoder = encoder
    return server


def serve(port: int, model: str = DEFAULT_MODEL, host: str = "127.0.0.1") -> None:
    """Load the encoder, bind, and serve until interrupted."""
    encoder = load_encoder(model)
    server = make_server(host, port, encoder)
    actual_port = server.server_address[1]
    print(f"embed-service: {encoder.name} ({encoder.dim}-d) on http://{host}:{actual_port}")
    try:
        server.serve_forever()
    finally:
        server.server_close()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-service",
        description="Serve sentence embeddings over the /embed wire contract.",
    )
    parser.add_argument("--version", action="version", version=f"embed-service {__version__}")
    parser.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("EMBED_SERVICE_PORT", "8601")),
        help="listen port (default: $EMBED_SERVICE_PORT or 8601; 0 picks a free port)",
    )
    parser.add_argument(
        "--model",
        default=os.environ.get("EMBED_SERVICE_MODEL", DEFAULT_MODEL),
        help="encoder name: hash-<dim>, or a sentence-transformers model "
        "(default: $EMBED_SERVICE_MODEL or %(default)s)",
    )
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    try:
        serve(args.port, args.model, args.host)
    except EncoderLoadError as exc:
        print(json.dumps({"error": "EncoderLoadError", "detail": str(exc)}), file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
