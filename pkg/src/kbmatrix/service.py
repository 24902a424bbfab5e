"""Session service: load a KB, hold matrix views, apply commands, emit snapshots.

Snapshots are full-state JSON documents with a fixed key order, so equal
session states always encode to byte-identical text:

    {"revision": int,
     "rows": [{"occurrence", "node", "depth", "expanded", "hasChildren", "tooltip"}, ...],
     "cols": [... same shape ...],
     "cells": [{"row": rowIndex, "col": colIndex, "kind": "explicit"|"implicit",
                "visibility": "direct"|"hiddenBelow"|"revealedBelow",
                "relations": [{"name", "direction": "rowToCol"|"colToRow"}, ...],
                "tooltip"}, ...],
     "selected": null | {"node", "neighbors": [{"relation", "other",
                "direction": "out"|"in"}, ...]}}

Commands (one JSON object per request):

    {"type": "expand", "axis": "rows"|"cols", "occurrence": id}
    {"type": "collapse", "axis": "rows"|"cols", "occurrence": id}
    {"type": "reveal", "row": id, "col": id}
    {"type": "collapsePair", "row": id, "col": id}
    {"type": "select", "node": id}
    {"type": "deselect"}

Every successfully applied command bumps the session revision by exactly 1.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import matrix
from .hierarchy import DEFAULT_MAX_OCCURRENCES, Forest, UnfoldOverflowError, unfold_forest
from .matrix import Axis, EngineError, MatrixView, occurrence_depth
from .model import KnowledgeBase, validate
from .parser import ParseError, parse_kb

DEFAULT_IDLE_TIMEOUT = 3600.0


class ServiceError(Exception):
    """Request-level failure; `code` names it on the wire."""

    code = "serviceError"
    http_status = 400

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class BadRequest(ServiceError):
    code = "badRequest"


class SessionNotFound(ServiceError):
    code = "sessionNotFound"
    http_status = 404


class ValidationFailure(Exception):
    """KB text parsed but failed validation; points at the offending fact."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


def load_kb(text: str, max_occurrences: int = DEFAULT_MAX_OCCURRENCES) -> tuple[KnowledgeBase, Forest]:
    """Parse, validate, and unfold KB text.

    Raises ParseError, ValidationFailure, or UnfoldOverflowError.
    """
    kb = parse_kb(text)
    errors = [d for d in validate(kb) if d.severity == "error"]
    if errors:
        first = errors[0]
        if 0 <= first.fact_index < len(kb.positions):
            line, column = kb.positions[first.fact_index]
        else:
            line, column = 1, 1
        raise ValidationFailure(line, column, first.message)
    return kb, unfold_forest(kb, max_occurrences)


def _axis_entries(kb: KnowledgeBase, forest: Forest, state: matrix.AxisState) -> list[dict]:
    entries = []
    for occ_id in matrix.visible_occurrences(forest, state):
        occ = forest.occurrences[occ_id]
        entries.append(
            {
                "occurrence": occ_id,
                "node": occ.node,
                "depth": occurrence_depth(occ_id),
                "expanded": occ_id in state.expanded,
                "hasChildren": bool(occ.children),
                "tooltip": matrix.node_tooltip(kb, forest, occ_id),
            }
        )
    return entries


def build_snapshot(kb: KnowledgeBase, forest: Forest, view: MatrixView, revision: int) -> dict:
    """Wire-shape snapshot dict; key order here is the documented order."""
    rows = _axis_entries(kb, forest, view.rows)
    cols = _axis_entries(kb, forest, view.cols)
    row_index = {entry["occurrence"]: i for i, entry in enumerate(rows)}
    col_index = {entry["occurrence"]: i for i, entry in enumerate(cols)}
    cells = [
        {
            "row": row_index[mark.row],
            "col": col_index[mark.col],
            "kind": mark.kind.value,
            "visibility": mark.visibility.value,
            "relations": [
                {"name": name, "direction": direction.value}
                for name, direction in mark.relations
            ],
            "tooltip": mark.tooltip,
        }
        for mark in view.cells
    ]
    if view.selected is None:
        selected = None
    else:
        graph = matrix.neighborhood(kb, view.selected)
        selected = {
            "node": graph.center,
            "neighbors": [
                {"relation": relation, "other": other, "direction": direction.value}
                for relation, other, direction in graph.neighbors
            ],
        }
    return {"revision": revision, "rows": rows, "cols": cols, "cells": cells, "selected": selected}


def encode_snapshot(snapshot: dict) -> str:
    """Compact deterministic JSON; key order is the dict insertion order."""
    return json.dumps(snapshot, separators=(",", ":"), ensure_ascii=False)


@dataclass
class Session:
    session_id: str
    kb: KnowledgeBase
    forest: Forest
    view: MatrixView
    revision: int = 0
    last_used: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self) -> dict:
        return build_snapshot(self.kb, self.forest, self.view, self.revision)


def _parse_axis(raw) -> Axis:
    if raw == "rows":
        return Axis.ROWS
    if raw == "cols":
        return Axis.COLS
    raise BadRequest(f"axis must be 'rows' or 'cols', got {raw!r}")


def _text_field(command: dict, name: str) -> str:
    value = command.get(name)
    if not isinstance(value, str):
        raise BadRequest(f"command field {name!r} must be a string")
    return value


def _apply_to_view(view: MatrixView, command: dict) -> MatrixView:
    if not isinstance(command, dict):
        raise BadRequest("command must be a JSON object")
    ctype = command.get("type")
    if ctype == "expand":
        return matrix.expand(view, _parse_axis(command.get("axis")), _text_field(command, "occurrence"))
    if ctype == "collapse":
        return matrix.collapse(view, _parse_axis(command.get("axis")), _text_field(command, "occurrence"))
    if ctype == "reveal":
        return matrix.reveal(view, _text_field(command, "row"), _text_field(command, "col"))
    if ctype == "collapsePair":
        return matrix.collapse_pair(view, _text_field(command, "row"), _text_field(command, "col"))
    if ctype == "select":
        return matrix.select(view, _text_field(command, "node"))
    if ctype == "deselect":
        return matrix.deselect(view)
    raise BadRequest(f"unknown command type: {ctype!r}")


class SessionStore:
    """In-memory sessions with idle eviction.

    Commands within one session are serialized by the session lock; the
    store lock only guards the session table. `clock` is injectable so
    eviction is testable without sleeping.
    """

    def __init__(
        self,
        idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
        clock=time.monotonic,
        max_occurrences: int = DEFAULT_MAX_OCCURRENCES,
    ):
        self.idle_timeout = idle_timeout
        self.clock = clock
        self.max_occurrences = max_occurrences
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _evict_idle(self, now: float) -> None:
        expired = [
            sid
            for sid, session in self._sessions.items()
            if now - session.last_used > self.idle_timeout
        ]
        for sid in expired:
            del self._sessions[sid]

    def create(self, kb_text: str) -> Session:
        kb, forest = load_kb(kb_text, self.max_occurrences)
        view = matrix.new_view(kb, forest)
        session = Session(secrets.token_urlsafe(16), kb, forest, view)
        with self._lock:
            now = self.clock()
            self._evict_idle(now)
            session.last_used = now
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            now = self.clock()
            self._evict_idle(now)
            session = self._sessions.get(session_id)
            if session is None:
                raise SessionNotFound(f"no such session: {session_id}")
            session.last_used = now
            return session

    def delete(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise SessionNotFound(f"no such session: {session_id}")
            del self._sessions[session_id]

    def apply_command(self, session_id: str, command: dict) -> dict:
        session = self.get(session_id)
        with session.lock:
            session.view = _apply_to_view(session.view, command)
            session.revision += 1
            return session.snapshot()

    def snapshot(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            return session.snapshot()


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class MatrixHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        store: SessionStore,
        ui_dir: str | None = None,
        default_kb_text: str | None = None,
    ):
        super().__init__(address, _Handler)
        self.store = store
        self.ui_dir = os.path.abspath(ui_dir) if ui_dir else None
        self.default_kb_text = default_kb_text


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    # the default handler logs every request to stderr; keep the server quiet
    def log_message(self, format, *args):  # noqa: A002 - base class signature
        pass

    @property
    def store(self) -> SessionStore:
        return self.server.store

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: dict) -> None:
        body = encode_snapshot(payload).encode("utf-8")
        self._send(status, body, "application/json; charset=utf-8")

    def _send_error(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length > 0 else b""

    def _session_id(self, parts: list[str]) -> str:
        # parts = ["session", "{id}", ...]
        return parts[1]

    def do_GET(self) -> None:
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if parts == ["healthz"]:
                self._send_json(200, {"ok": True})
            elif parts == ["default-kb"]:
                if self.server.default_kb_text is None:
                    self._send_error(404, "notFound", "no default KB loaded")
                else:
                    self._send(200, self.server.default_kb_text.encode("utf-8"), "text/plain; charset=utf-8")
            elif len(parts) == 3 and parts[0] == "session" and parts[2] == "snapshot":
                self._send_json(200, self.store.snapshot(self._session_id(parts)))
            else:
                self._serve_static(parts)
        except ServiceError as err:
            self._send_error(err.http_status, err.code, err.message)

    def do_POST(self) -> None:
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if parts == ["session"]:
                text = self._read_body().decode("utf-8", errors="replace")
                session = self.store.create(text)
                self._send_json(
                    200, {"sessionId": session.session_id, "snapshot": session.snapshot()}
                )
            elif len(parts) == 3 and parts[0] == "session" and parts[2] == "command":
                try:
                    command = json.loads(self._read_body().decode("utf-8", errors="replace"))
                except json.JSONDecodeError as err:
                    raise BadRequest(f"invalid JSON body: {err}") from err
                self._send_json(200, self.store.apply_command(self._session_id(parts), command))
            else:
                self._send_error(404, "notFound", f"no such endpoint: {self.path}")
        except ParseError as err:
            self._send_error(400, "parseError", str(err))
        except ValidationFailure as err:
            self._send_error(400, "validationError", str(err))
        except UnfoldOverflowError as err:
            self._send_error(400, "overflow", str(err))
        except EngineError as err:
            self._send_error(400, err.code, str(err))
        except ServiceError as err:
            self._send_error(err.http_status, err.code, err.message)

    def do_DELETE(self) -> None:
        try:
            parts = [p for p in self.path.split("?")[0].split("/") if p]
            if len(parts) == 2 and parts[0] == "session":
                self.store.delete(self._session_id(parts))
                self._send_json(200, {"ok": True})
            else:
                self._send_error(404, "notFound", f"no such endpoint: {self.path}")
        except ServiceError as err:
            self._send_error(err.http_status, err.code, err.message)

    def _serve_static(self, parts: list[str]) -> None:
        ui_dir = self.server.ui_dir
        if ui_dir is None:
            self._send_error(404, "notFound", f"no such endpoint: {self.path}")
            return
        rel = "/".join(parts) or "index.html"
        full = os.path.normpath(os.path.join(ui_dir, rel))
        if full != ui_dir and not full.startswith(ui_dir + os.sep):
            self._send_error(404, "notFound", "path outside asset directory")
            return
        if not os.path.isfile(full):
            self._send_error(404, "notFound", f"no such asset: {rel}")
            return
        with open(full, "rb") as handle:
            body = handle.read()
        ext = os.path.splitext(full)[1].lower()
        self._send(200, body, _CONTENT_TYPES.get(ext, "application/octet-stream"))


def make_server(
    addr: str = "127.0.0.1",
    port: int = 7421,
    kb_text: str | None = None,
    ui_dir: str | None = None,
    idle_timeout: float = DEFAULT_IDLE_TIMEOUT,
) -> MatrixHTTPServer:
    store = SessionStore(idle_timeout=idle_timeout)
    return MatrixHTTPServer((addr, port), store, ui_dir=ui_dir, default_kb_text=kb_text)
