"""JSON-over-HTTP front door for the review store, plus static UI hosting.

Endpoints (no authentication: this is a deployment-local tool, bind it to
localhost):

    GET  /runs
    GET  /runs/{id}/files
    GET  /runs/{id}/files/{path}/comparison
    POST /runs/{id}/files/{path}/decision
    POST /runs/{id}/apply
"""

from __future__ import annotations

import json
import logging
import mimetypes
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlparse

from .errors import ConflictError, DecisionValidationError, GateError, NotFoundError, ReviewError
from .review import ReviewDecision, ReviewStore, Verdict

logger = logging.getLogger(__name__)

_COMPARISON_RE = re.compile(r"^/runs/([^/]+)/files/(.+)/comparison$")
_DECISION_RE = re.compile(r"^/runs/([^/]+)/files/(.+)/decision$")
_FILES_RE = re.compile(r"^/runs/([^/]+)/files$")
_APPLY_RE = re.compile(r"^/runs/([^/]+)/apply$")


def make_handler(store: ReviewStore, ui_dir: Path | None):
    class ReviewHandler(BaseHTTPRequestHandler):
        def log_message(self, format: str, *args) -> None:  # noqa: A002
            logger.debug("%s - %s", self.address_string(), format % args)

        def _send_json(self, payload: dict, status: int = 200) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _send_error_json(self, exc: Exception) -> None:
            if isinstance(exc, NotFoundError):
                self._send_json({"error": str(exc)}, status=404)
            elif isinstance(exc, DecisionValidationError):
                self._send_json({"error": str(exc)}, status=400)
            elif isinstance(exc, GateError):
                self._send_json({"error": str(exc), "undecided": exc.undecided}, status=409)
            elif isinstance(exc, ConflictError):
                self._send_json({"error": str(exc)}, status=409)
            else:
                logger.exception("unhandled review-service error")
                self._send_json({"error": str(exc)}, status=500)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            raw = self.rfile.read(length).decode("utf-8")
            return json.loads(raw) if raw.strip() else {}

        # ---- GET ------------------------------------------------------
        def do_GET(self) -> None:  # noqa: N802
            path = urlparse(self.path).path
            try:
                if path == "/runs":
                    self._send_json({"runs": store.list_runs()})
                    return
                match = _FILES_RE.match(path)
                if match:
                    run_id = unquote(match.group(1))
                    state = store.run_state(run_id)
                    self._send_json(
                        {
                            "run_id": run_id,
                            "applied": state.applied,
                            "review_all": state.review_all,
                            "pending_required": state.pending_required,
                            "files": store.list_files(run_id),
                        }
                    )
                    return
                match = _COMPARISON_RE.match(path)
                if match:
                    run_id = unquote(match.group(1))
                    file_path = unquote(match.group(2))
                    report = store.get_comparison(run_id, file_path)
                    self._send_json(report.to_dict())
                    return
                if self._serve_static(path):
                    return
                self._send_json({"error": f"no such resource {path}"}, status=404)
            except ReviewError as exc:
                self._send_error_json(exc)

        def _serve_static(self, path: str) -> bool:
            if ui_dir is None:
                return False
            rel = "index.html" if path == "/" else path.lstrip("/")
            target = (ui_dir / rel).resolve()
            if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
                return False
            content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            body = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return True

        # ---- POST -----------------------------------------------------
        def do_POST(self) -> None:  # noqa: N802
            path = urlparse(self.path).path
            try:
                match = _DECISION_RE.match(path)
                if match:
                    run_id = unquote(match.group(1))
                    file_path = unquote(match.group(2))
                    body = self._read_body()
                    try:
                        verdict = Verdict(str(body.get("verdict", "")).upper())
                    except ValueError:
                        raise DecisionValidationError(
                            f"unknown verdict {body.get('verdict')!r}"
                        ) from None
                    decision = ReviewDecision(
                        file_location=file_path,
                        verdict=verdict,
                        edited_content=body.get("edited_content"),
                        note=body.get("note"),
                    )
                    state = store.record_decision(run_id, decision)
                    self._send_json(state.to_dict())
                    return
                match = _APPLY_RE.match(path)
                if match:
                    run_id = unquote(match.group(1))
                    final_tree = store.apply_run(run_id)
                    self._send_json({"run_id": run_id, "final_tree": str(final_tree)})
                    return
                self._send_json({"error": f"no such resource {path}"}, status=404)
            except (ReviewError, json.JSONDecodeError) as exc:
                if isinstance(exc, json.JSONDecodeError):
                    self._send_json({"error": f"invalid JSON body: {exc}"}, status=400)
                else:
                    self._send_error_json(exc)

    return ReviewHandler


def make_server(
    store: ReviewStore,
    host: str = "127.0.0.1",
    port: int = 0,
    ui_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    handler = make_handler(store, Path(ui_dir) if ui_dir else None)
    return ThreadingHTTPServer((host, port), handler)
