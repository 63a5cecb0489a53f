"""HTTP facade over one loaded document, for the interactive UI.

Single document, single writer: edit batches are serialized under a lock
and applied to immutable snapshots, so concurrent readers always see one
coherent revision. Evaluation results are cached per revision; a response
never depends on whether the cache was warm.

Endpoints (JSON bodies, UTF-8):
  GET  /api/doc                     document + revision
  POST /api/edits                   {"base_revision": N, "edits": [...]}
                                    -> 200 {"revision": N+1} | 409 {"revision": current}
  GET  /api/values                  evaluation results incl. assertion diagnostics
  GET  /api/view?theme=NAME         render tree for a theme
  GET  /api/toc?theme=NAME          table of contents
  POST /api/stubs?apply=true|false  pending stub list (apply also inserts)
  GET  /api/suggest?q=...&k=5       reuse suggestions
  /                                 static UI assets
"""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .annotate import generate_stubs, pending_stubs
from .config import Config, DEFAULT_CONFIG
from .engine import EvalResult, evaluate_with_assertions
from .errors import EditError, EmptyLibrary, UnknownTheme
from .lsheet import doc_to_obj, edit_from_obj, values_to_json
from .model import Document, apply_edit
from .reuse import LibraryIndex, suggest_reuse
from .weave import render_tree_to_obj, toc, toc_to_obj, weave


class Session:
    """One document snapshot chain with optimistic concurrency."""

    def __init__(self, doc: Document, config: Config = DEFAULT_CONFIG):
        self._doc = doc
        self._config = config
        self._lock = threading.Lock()
        self._cache: tuple[int, EvalResult] | None = None

    @property
    def revision(self) -> int:
        return self._doc.revision

    def snapshot(self) -> Document:
        return self._doc

    def apply_edit_batch(self, base_revision: int, edits) -> int | None:
        """All-or-nothing batch; one revision bump per batch.

        Returns the new revision, or None on a revision conflict. Edit
        failures raise EditError subclasses and leave the document unchanged.
        """
        if not edits:
            raise EditError("edit batch is empty")
        with self._lock:
            if base_revision != self._doc.revision:
                return None
            doc = self._doc
            for edit in edits:
                doc = apply_edit(doc, edit, self._config)
            doc = replace(doc, revision=base_revision + 1)
            self._doc = doc
            return doc.revision

    def apply_stubs(self) -> tuple[int, list]:
        with self._lock:
            doc, infos = generate_stubs(self._doc)
            if infos:
                self._doc = doc
            return self._doc.revision, infos

    def get_values(self) -> EvalResult:
        """Cached when the revision matches; cache misses evaluate outside
        the lock so readers of the previous revision keep going."""
        with self._lock:
            doc = self._doc
            if self._cache is not None and self._cache[0] == doc.revision:
                return self._cache[1]
        result = evaluate_with_assertions(doc)
        with self._lock:
            if self._doc.revision == doc.revision:
                self._cache = (doc.revision, result)
        return result


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".map": "application/json",
    ".ico": "image/x-icon",
}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "litgrid"

    # quiet by default; the CLI enables logging with --verbose
    def log_message(self, fmt, *args):
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    @property
    def session(self) -> Session:
        return self.server.session

    def _send(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, obj) -> None:
        self._send(status, json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8"))

    def _read_json_body(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        return json.loads(raw.decode("utf-8"))

    def do_GET(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        try:
            if url.path == "/api/doc":
                self._send_json(200, doc_to_obj(self.session.snapshot()))
            elif url.path == "/api/values":
                self._send(200, values_to_json(self.session.get_values()).encode("utf-8"))
            elif url.path == "/api/view":
                theme = query.get("theme", ["all"])[0]
                doc = self.session.snapshot()
                result = self.session.get_values()
                obj = render_tree_to_obj(weave(doc, theme, result))
                obj["revision"] = doc.revision
                self._send_json(200, obj)
            elif url.path == "/api/toc":
                theme = query.get("theme", ["all"])[0]
                self._send_json(200, {"toc": toc_to_obj(toc(self.session.snapshot(), theme))})
            elif url.path == "/api/suggest":
                q = query.get("q", [""])[0]
                k = int(query.get("k", ["5"])[0])
                suggestions = suggest_reuse(q, self.server.library, k=k)
                self._send_json(
                    200,
                    {"suggestions": [{"doc_path": s.doc_path, "chunk_id": s.chunk_id, "score": s.score} for s in suggestions]},
                )
            elif url.path.startswith("/api/"):
                self._send_json(404, {"error": f"no such endpoint {url.path}"})
            else:
                self._serve_static(url.path)
        except UnknownTheme as e:
            self._send_json(404, {"error": str(e)})
        except EmptyLibrary as e:
            self._send_json(400, {"error": str(e)})
        except (ValueError, KeyError) as e:
            self._send_json(400, {"error": str(e)})

    def do_POST(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        try:
            if url.path == "/api/edits":
                body = self._read_json_body()
                base_revision = int(body["base_revision"])
                edits = [edit_from_obj(obj) for obj in body["edits"]]
                new_revision = self.session.apply_edit_batch(base_revision, edits)
                if new_revision is None:
                    self._send_json(409, {"revision": self.session.revision})
                else:
                    self._send_json(200, {"revision": new_revision})
            elif url.path == "/api/stubs":
                apply_flag = query.get("apply", ["false"])[0] == "true"
                if apply_flag:
                    revision, infos = self.session.apply_stubs()
                    self._send_json(
                        200,
                        {
                            "applied": True,
                            "revision": revision,
                            "inserted": [{"target": s.target, "inserted": s.inserted} for s in infos],
                        },
                    )
                else:
                    self._send_json(200, {"applied": False, "pending": pending_stubs(self.session.snapshot())})
            elif url.path.startswith("/api/"):
                self._send_json(404, {"error": f"no such endpoint {url.path}"})
            else:
                self._send_json(404, {"error": "not found"})
        except EditError as e:
            self._send_json(400, {"error": str(e)})
        except (json.JSONDecodeError, UnicodeDecodeError, ValueError, KeyError, TypeError) as e:
            self._send_json(400, {"error": f"malformed request: {e}"})

    def _serve_static(self, path: str) -> None:
        root: Path | None = self.server.ui_dir
        if root is None:
            if path == "/":
                body = (
                    "<!DOCTYPE html><html><body><h1>litgrid</h1>"
                    "<p>No UI assets configured (serve with --ui DIR). The API lives under /api/.</p>"
                    "</body></html>"
                ).encode("utf-8")
                self._send(200, body, "text/html; charset=utf-8")
            else:
                self._send(404, b"not found", "text/plain; charset=utf-8")
            return
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root.resolve() not in target.parents and target != root.resolve():
            self._send(404, b"not found", "text/plain; charset=utf-8")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send(404, b"not found", "text/plain; charset=utf-8")
            return
        content_type = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send(200, target.read_bytes(), content_type)


def create_server(
    doc: Document,
    port: int = 7878,
    library: LibraryIndex | None = None,
    ui_dir: Path | None = None,
    config: Config = DEFAULT_CONFIG,
    verbose: bool = False,
) -> ThreadingHTTPServer:
    """A ready-to-run server; caller owns serve_forever()/shutdown()."""
    server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
    server.session = Session(doc, config)
    server.library = library if library is not None else LibraryIndex()
    server.ui_dir = ui_dir
    server.verbose = verbose
    return server
