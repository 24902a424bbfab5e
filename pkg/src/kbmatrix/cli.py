"""Command-line entry points.

    kbmatrix parse  <file> [--check]
    kbmatrix forest <file> [--format json|text]
    kbmatrix view   <file> [--rows id,...] [--cols id,...] [--expand occId,...]
                           [--format json|text]
    kbmatrix serve  [file] [--port 7421] [--addr 127.0.0.1] [--ui dir]

Exit codes: 0 success, 1 usage error, 2 parse/validation/data error.
Parse and validation failures print `line:col: message` to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import matrix
from .hierarchy import OccurrenceKind, UnfoldOverflowError, forest_to_dict
from .matrix import Axis, EngineError
from .parser import ParseError, serialize_kb, parse_kb
from .service import ValidationFailure, build_snapshot, encode_snapshot, load_kb, make_server
from .model import validate


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the CLI contract reserves 2 for data errors
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="kbmatrix", description="Knowledge-base matrix browser tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse and validate a KB file")
    p_parse.add_argument("file")
    p_parse.add_argument("--check", action="store_true", help="validate only, print nothing")

    p_forest = sub.add_parser("forest", help="print the unfolded forest")
    p_forest.add_argument("file")
    p_forest.add_argument("--format", choices=["json", "text"], default="json")

    p_view = sub.add_parser("view", help="print an initial matrix snapshot")
    p_view.add_argument("file")
    p_view.add_argument("--rows", help="comma-separated root node ids for the row axis")
    p_view.add_argument("--cols", help="comma-separated root node ids for the column axis")
    p_view.add_argument("--expand", help="comma-separated occurrence ids to expand on both axes")
    p_view.add_argument("--format", choices=["json", "text"], default="json")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("file", nargs="?", help="KB file offered to clients at /default-kb")
    p_serve.add_argument("--port", type=int, default=7421)
    p_serve.add_argument("--addr", default="127.0.0.1")
    p_serve.add_argument("--ui", help="directory of frontend assets to serve at /")

    return parser


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _split_ids(raw: str | None) -> list[str] | None:
    if raw is None:
        return None
    return [part for part in raw.split(",") if part]


def _cmd_parse(args) -> int:
    kb = parse_kb(_read_text(args.file))
    diagnostics = validate(kb)
    for diag in diagnostics:
        if diag.severity != "error":
            line, column = kb.positions[diag.fact_index]
            print(f"{line}:{column}: warning: {diag.message}", file=sys.stderr)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        line, column = kb.positions[errors[0].fact_index]
        print(f"{line}:{column}: {errors[0].message}", file=sys.stderr)
        return 2
    if not args.check:
        sys.stdout.write(serialize_kb(kb))
    return 0


def _forest_text(forest) -> str:
    lines = []
    for root in forest.roots:
        stack = [(root, 0)]
        while stack:
            occ_id, depth = stack.pop()
            occ = forest.occurrences[occ_id]
            label = occ.node if occ.kind is OccurrenceKind.ROOT else f"{occ.node} ({occ.kind.value})"
            lines.append("  " * depth + label)
            stack.extend((child, depth + 1) for child in reversed(occ.children))
    return "".join(line + "\n" for line in lines)


def _cmd_forest(args) -> int:
    _, forest = load_kb(_read_text(args.file))
    if args.format == "json":
        print(json.dumps(forest_to_dict(forest), separators=(",", ":"), ensure_ascii=False))
    else:
        sys.stdout.write(_forest_text(forest))
    return 0


def _snapshot_text(snapshot: dict) -> str:
    lines = [f"revision {snapshot['revision']}"]
    for axis in ("rows", "cols"):
        lines.append(f"{axis}:")
        for entry in snapshot[axis]:
            toggle = ("-" if entry["expanded"] else "+") if entry["hasChildren"] else " "
            lines.append("  " + "  " * entry["depth"] + f"{toggle} {entry['node']} [{entry['occurrence']}]")
    lines.append("cells:")
    for cell in snapshot["cells"]:
        names = ", ".join(
            f"{rel['name']}({rel['direction']})" for rel in cell["relations"]
        )
        lines.append(
            f"  ({cell['row']},{cell['col']}) {cell['kind']} {cell['visibility']}: {names}"
        )
    return "".join(line + "\n" for line in lines)


def _cmd_view(args) -> int:
    kb, forest = load_kb(_read_text(args.file))
    view = matrix.new_view(kb, forest, _split_ids(args.rows), _split_ids(args.cols))
    for occ_id in _split_ids(args.expand) or []:
        applied = False
        failure: EngineError | None = None
        for axis in (Axis.ROWS, Axis.COLS):
            try:
                view = matrix.expand(view, axis, occ_id)
                applied = True
            except EngineError as err:
                failure = err
        if not applied:
            assert failure is not None
            raise failure
    snapshot = build_snapshot(kb, forest, view, revision=0)
    if args.format == "json":
        print(encode_snapshot(snapshot))
    else:
        sys.stdout.write(_snapshot_text(snapshot))
    return 0


def _cmd_serve(args) -> int:
    kb_text = None
    if args.file is not None:
        kb_text = _read_text(args.file)
        load_kb(kb_text)  # fail fast on a bad file instead of at first session
    ui_dir = args.ui
    if ui_dir is None and os.path.isdir(os.path.join("frontend", "dist")):
        ui_dir = os.path.join("frontend", "dist")
    server = make_server(addr=args.addr, port=args.port, kb_text=kb_text, ui_dir=ui_dir)
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


_COMMANDS = {
    "parse": _cmd_parse,
    "forest": _cmd_forest,
    "view": _cmd_view,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except OSError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (ParseError, ValidationFailure) as err:
        print(str(err), file=sys.stderr)
        return 2
    except (UnfoldOverflowError, EngineError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
