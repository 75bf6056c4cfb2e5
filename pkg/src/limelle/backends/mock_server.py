"""Serve the mock backends over HTTP, matching the wire contracts of the real clients.

Endpoints: ``POST /predict``, ``POST /embed`` and ``POST /complete`` (the last one
speaks the ``plain`` provider adapter: ``{"prompt", "temperature", "seed"}`` in,
``{"completion"}`` out).
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class _Handler(BaseHTTPRequestHandler):
    server: "MockServer"

    def log_message(self, format, *args):
        pass

    def _reply(self, status: int, body) -> None:
        data = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        try:
            req = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            return self._reply(400, {"error": "bad json"})
        srv = self.server
        with srv.lock:
            srv.requests[self.path] = srv.requests.get(self.path, 0) + 1
        try:
            if self.path == "/predict" and srv.classifier is not None:
                return self._reply(200, {"probs": srv.classifier.predict(req["texts"])})
            if self.path == "/embed" and srv.embedder is not None:
                return self._reply(200, {"embeddings": srv.embedder.embed(req["texts"])})
            if self.path == "/complete" and srv.llm is not None:
                text = srv.llm.complete(req["prompt"], temperature=req.get("temperature", 0.7), seed=req.get("seed"))
                return self._reply(200, {"completion": text})
        except Exception as exc:  # surfaced to the client as a 500
            return self._reply(500, {"error": str(exc)})
        return self._reply(404, {"error": f"no route {self.path}"})


class MockServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, classifier=None, llm=None, embedder=None, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.classifier = classifier
        self.llm = llm
        self.embedder = embedder
        self.requests: dict[str, int] = {}
        self.lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
