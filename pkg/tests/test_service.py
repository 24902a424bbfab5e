"""Session store, wire snapshots, and the HTTP service end to end."""

import http.client
import json
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from kbmatrix.hierarchy import UnfoldOverflowError
from kbmatrix.matrix import NotHidden
from kbmatrix.parser import ParseError
from kbmatrix.service import (
    BadRequest,
    SessionNotFound,
    SessionStore,
    ValidationFailure,
    build_snapshot,
    encode_snapshot,
    load_kb,
    make_server,
)

REPO = Path(__file__).resolve().parent.parent
FIXTURE1 = (REPO / "fixtures" / "fixture1.kb").read_text()
GOLDEN_INITIAL = (REPO / "golden" / "fixture1_initial.json").read_text()


class FakeClock:
    def __init__(self):
        self.now = 1000.0

    def __call__(self) -> float:
        return self.now


# -------------------------------------------------------------------- load_kb


def test_load_kb_success():
    kb, forest = load_kb(FIXTURE1)
    assert forest.roots == ["a"]
    assert len(kb.facts) == 5


def test_load_kb_parse_error_passes_through():
    with pytest.raises(ParseError) as exc:
        load_kb("x[knows -> ].")
    assert str(exc.value) == "1:12: expected value"


def test_load_kb_conflict_becomes_validation_failure():
    with pytest.raises(ValidationFailure) as exc:
        load_kb("x[a -> b].\nx[a -> c].\n")
    err = exc.value
    assert (err.line, err.column) == (2, 3)
    assert str(err).startswith("2:3: ")


def test_load_kb_warnings_do_not_block():
    kb, forest = load_kb("a :: a.\n")
    # the self-loop is only a warning; a becomes a cycle-breaking root
    assert forest.roots == ["a"]
    assert set(forest.occurrences) == {"a", "a/a!y"}


def test_load_kb_overflow():
    text = "b :: a.\nc :: a.\nd :: b.\nd :: c.\n"
    with pytest.raises(UnfoldOverflowError):
        load_kb(text, max_occurrences=3)


# ------------------------------------------------------------------ snapshots


def test_initial_snapshot_matches_golden():
    kb, forest = load_kb(FIXTURE1)
    import kbmatrix.matrix as matrix

    snapshot = build_snapshot(kb, forest, matrix.new_view(kb, forest), 0)
    assert snapshot == json.loads(GOLDEN_INITIAL)
    assert encode_snapshot(snapshot) + "\n" == GOLDEN_INITIAL


def test_snapshot_key_order_is_pinned():
    kb, forest = load_kb(FIXTURE1)
    import kbmatrix.matrix as matrix

    text = encode_snapshot(build_snapshot(kb, forest, matrix.new_view(kb, forest), 0))
    assert text.startswith('{"revision":0,"rows":[{"occurrence":"a","node":"a","depth":0,')


def test_snapshot_bytes_are_deterministic():
    store = SessionStore()
    session = store.create(FIXTURE1)
    first = encode_snapshot(store.snapshot(session.session_id))
    second = encode_snapshot(store.snapshot(session.session_id))
    assert first == second


# -------------------------------------------------------------- session store


def test_command_sequence_bumps_revision_each_time():
    store = SessionStore()
    session = store.create(FIXTURE1)
    assert session.revision == 0
    assert session.snapshot()["revision"] == 0

    s1 = store.apply_command(
        session.session_id, {"type": "expand", "axis": "rows", "occurrence": "a"}
    )
    assert s1["revision"] == 1
    assert [row["occurrence"] for row in s1["rows"]] == ["a", "a/b!s", "a/c!s"]

    s2 = store.apply_command(session.session_id, {"type": "reveal", "row": "a", "col": "a"})
    assert s2["revision"] == 2
    assert [row["occurrence"] for row in s2["rows"]] == ["a", "a/b!s", "a/b!s/x!i", "a/c!s"]
    # expanding col a exposes both subclasses even though only a/c!s opened
    assert [col["occurrence"] for col in s2["cols"]] == ["a", "a/b!s", "a/c!s", "a/c!s/y!i"]

    s3 = store.apply_command(
        session.session_id, {"type": "collapsePair", "row": "a", "col": "a"}
    )
    assert s3["revision"] == 3
    assert [row["occurrence"] for row in s3["rows"]] == ["a"]

    s4 = store.apply_command(session.session_id, {"type": "select", "node": "x"})
    assert s4["revision"] == 4
    assert s4["selected"] == {
        "node": "x",
        "neighbors": [
            {"relation": "instanceOf", "other": "b", "direction": "out"},
            {"relation": "knows", "other": "y", "direction": "out"},
        ],
    }


def test_noop_commands_still_count_as_revisions():
    store = SessionStore()
    session = store.create(FIXTURE1)
    snap = store.apply_command(
        session.session_id, {"type": "collapse", "axis": "rows", "occurrence": "a"}
    )
    assert snap["revision"] == 1
    assert snap["rows"] == build_snapshot(session.kb, session.forest, session.view, 0)["rows"]


def test_failed_command_does_not_bump_revision():
    store = SessionStore()
    session = store.create(FIXTURE1)
    with pytest.raises(NotHidden):
        store.apply_command(session.session_id, {"type": "reveal", "row": "a", "col": "zzz"})
    assert session.revision == 0


def test_command_validation():
    store = SessionStore()
    session = store.create(FIXTURE1)
    with pytest.raises(BadRequest):
        store.apply_command(session.session_id, {"type": "teleport"})
    with pytest.raises(BadRequest):
        store.apply_command(session.session_id, {"type": "expand", "axis": "diag", "occurrence": "a"})
    with pytest.raises(BadRequest):
        store.apply_command(session.session_id, {"type": "expand", "axis": "rows", "occurrence": 3})
    with pytest.raises(BadRequest):
        store.apply_command(session.session_id, ["not", "a", "dict"])


def test_unknown_session():
    store = SessionStore()
    with pytest.raises(SessionNotFound):
        store.snapshot("missing")
    with pytest.raises(SessionNotFound):
        store.delete("missing")


def test_session_ids_are_unique_and_opaque():
    store = SessionStore()
    ids = {store.create(FIXTURE1).session_id for _ in range(20)}
    assert len(ids) == 20
    assert all(len(sid) >= 16 for sid in ids)


def test_idle_sessions_are_evicted():
    clock = FakeClock()
    store = SessionStore(idle_timeout=100.0, clock=clock)
    stale = store.create(FIXTURE1)
    clock.now += 60
    fresh = store.create(FIXTURE1)
    clock.now += 60  # stale is now 120s idle, fresh only 60s
    assert store.get(fresh.session_id) is fresh
    with pytest.raises(SessionNotFound):
        store.get(stale.session_id)


def test_activity_keeps_a_session_alive():
    clock = FakeClock()
    store = SessionStore(idle_timeout=100.0, clock=clock)
    session = store.create(FIXTURE1)
    for _ in range(5):
        clock.now += 80
        store.snapshot(session.session_id)
    assert store.get(session.session_id) is session


# ----------------------------------------------------------------------- HTTP


@pytest.fixture()
def server(tmp_path):
    (tmp_path / "index.html").write_text("<!doctype html><p>ui</p>")
    (tmp_path / "app.js").write_text("console.log(1)")
    (tmp_path.parent / "secret.txt").write_text("keep out")
    srv = make_server(port=0, kb_text=FIXTURE1, ui_dir=str(tmp_path))
    thread = threading.Thread(target=srv.serve_forever, kwargs={"poll_interval": 0.02})
    thread.start()
    try:
        yield f"http://127.0.0.1:{srv.server_address[1]}"
    finally:
        srv.shutdown()
        srv.server_close()
        thread.join(timeout=5)


def call(base: str, method: str, path: str, body: bytes | None = None):
    request = urllib.request.Request(base + path, data=body, method=method)
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, response.read(), response.headers.get("Content-Type", "")
    except urllib.error.HTTPError as err:
        return err.code, err.read(), err.headers.get("Content-Type", "")


def call_json(base: str, method: str, path: str, payload=None):
    body = None if payload is None else json.dumps(payload).encode("utf-8")
    if isinstance(payload, (bytes, str)):
        body = payload.encode("utf-8") if isinstance(payload, str) else payload
    status, raw, _ = call(base, method, path, body)
    return status, json.loads(raw)


def test_healthz(server):
    assert call_json(server, "GET", "/healthz") == (200, {"ok": True})


def test_session_lifecycle_over_http(server):
    status, created = call_json(server, "POST", "/session", FIXTURE1)
    assert status == 200
    sid = created["sessionId"]
    assert created["snapshot"] == json.loads(GOLDEN_INITIAL)

    status, snap = call_json(server, "GET", f"/session/{sid}/snapshot")
    assert (status, snap["revision"]) == (200, 0)

    status, snap = call_json(
        server, "POST", f"/session/{sid}/command",
        {"type": "expand", "axis": "rows", "occurrence": "a"},
    )
    assert status == 200
    assert snap["revision"] == 1
    assert len(snap["rows"]) == 3

    status, body = call_json(server, "DELETE", f"/session/{sid}")
    assert (status, body) == (200, {"ok": True})
    status, body = call_json(server, "GET", f"/session/{sid}/snapshot")
    assert status == 404
    assert body["error"]["code"] == "sessionNotFound"


def test_parse_error_maps_to_400(server):
    status, body = call_json(server, "POST", "/session", "x[knows -> ].")
    assert status == 400
    assert body["error"] == {"code": "parseError", "message": "1:12: expected value"}


def test_validation_error_maps_to_400(server):
    status, body = call_json(server, "POST", "/session", "x[a -> b].\nx[a -> c].\n")
    assert status == 400
    assert body["error"]["code"] == "validationError"
    assert body["error"]["message"].startswith("2:3:")


def test_engine_error_maps_to_400_with_code(server):
    _, created = call_json(server, "POST", "/session", FIXTURE1)
    sid = created["sessionId"]
    status, body = call_json(
        server, "POST", f"/session/{sid}/command", {"type": "reveal", "row": "a", "col": "zzz"}
    )
    assert status == 400
    assert body["error"]["code"] == "notHidden"


def test_invalid_json_command_body(server):
    _, created = call_json(server, "POST", "/session", FIXTURE1)
    sid = created["sessionId"]
    status, body = call_json(server, "POST", f"/session/{sid}/command", "{nope")
    assert status == 400
    assert body["error"]["code"] == "badRequest"


def test_unknown_endpoint_404(server):
    status, body = call_json(server, "POST", "/nope")
    assert status == 404
    assert body["error"]["code"] == "notFound"


def test_default_kb_is_served(server):
    status, raw, ctype = call(server, "GET", "/default-kb")
    assert status == 200
    assert raw.decode("utf-8") == FIXTURE1
    assert ctype.startswith("text/plain")


def test_static_ui_and_traversal_guard(server):
    status, raw, ctype = call(server, "GET", "/")
    assert (status, raw) == (200, b"<!doctype html><p>ui</p>")
    assert ctype.startswith("text/html")
    status, raw, ctype = call(server, "GET", "/app.js")
    assert status == 200
    assert ctype.startswith("text/javascript") or ctype.startswith("application/javascript")

    # raw connection: urllib would normalize the dotted path away
    host, port = server.replace("http://", "").split(":")
    conn = http.client.HTTPConnection(host, int(port))
    try:
        conn.request("GET", "/../secret.txt")
        response = conn.getresponse()
        assert response.status == 404
        assert b"keep out" not in response.read()
    finally:
        conn.close()


def test_unicode_snapshot_payload(server):
    status, created = call_json(server, "POST", "/session", 'x[note -> "héllo"].\n')
    assert status == 200
    rows = created["snapshot"]["rows"]
    assert rows[0]["tooltip"] == 'root\nnote = "héllo"'


def test_concurrent_commands_serialize_cleanly(server):
    _, created = call_json(server, "POST", "/session", FIXTURE1)
    sid = created["sessionId"]
    command = {"type": "collapse", "axis": "rows", "occurrence": "a"}

    def one_call(_):
        status, snap = call_json(server, "POST", f"/session/{sid}/command", command)
        assert status == 200
        return snap["revision"]

    with ThreadPoolExecutor(max_workers=8) as pool:
        revisions = list(pool.map(one_call, range(40)))
    assert sorted(revisions) == list(range(1, 41))
