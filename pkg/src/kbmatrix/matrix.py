"""Two-axis matrix view over an unfolded forest.

Rows and columns are tree axes over the same forest; each axis tracks which
roots it shows and which occurrences are expanded. A cell marks the
relationships between the row subtree and the column subtree:

- Direct: an edge sits exactly at (row node, col node). Drawn per direction.
- HiddenBelow: some edge under the pair is not shown as a Direct cell
  anywhere beneath it; expanding would surface it.
- RevealedBelow: everything under the pair is already shown as a Direct
  cell at some deeper visible pair.

Edges are node-level (declared and inherited relations, node targets only)
plus identity links between duplicate occurrences of one node. A node-level
edge u -> v is lifted to every (occurrence of u, occurrence of v) pair as a
row-to-col placement and mirrored col-to-row, so it is findable from either
axis. Identity links belong to one specific occurrence pair and are lifted
only there. Hidden/revealed aggregation works on the underlying edge, not
on individual placements: one visible placement reveals the edge for any
cell covering it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .hierarchy import Forest, OccurrenceKind, identity_pairs, taxonomic_edges
from .model import (
    KnowledgeBase,
    Multiplicity,
    NodeRef,
    Origin,
    RelationInstance,
    relation_edges,
    render_value,
)

IDENTITY_RELATION = "identity"


class Axis(Enum):
    ROWS = "rows"
    COLS = "cols"


class Direction(Enum):
    ROW_TO_COL = "rowToCol"
    COL_TO_ROW = "colToRow"


_DIRECTION_ORDER = {Direction.ROW_TO_COL: 0, Direction.COL_TO_ROW: 1}


class CellKind(Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


class Visibility(Enum):
    DIRECT = "direct"
    HIDDEN_BELOW = "hiddenBelow"
    REVEALED_BELOW = "revealedBelow"


class NeighborDirection(Enum):
    OUT = "out"
    IN = "in"


class EngineError(Exception):
    """Base for view-operation failures; `code` is the wire-level name."""

    code = "engineError"


class UnknownRoot(EngineError):
    code = "unknownRoot"


class UnknownNode(EngineError):
    code = "unknownNode"


class UnknownOccurrence(EngineError):
    code = "unknownOccurrence"


class NotVisible(EngineError):
    code = "notVisible"


class NotExpandable(EngineError):
    code = "notExpandable"


class NotHidden(EngineError):
    code = "notHidden"


class NotRevealed(EngineError):
    code = "notRevealed"


@dataclass(frozen=True)
class Placement:
    """One edge lifted to a concrete (row occurrence, col occurrence) slot.

    `unit` identifies the underlying edge shared by all placements of it;
    reveal state is tracked per unit.
    """

    row: str
    col: str
    relation: str
    direction: Direction
    origin: Origin
    meta: bool
    unit: tuple


@dataclass(frozen=True)
class AxisState:
    visible_roots: tuple[str, ...]
    expanded: frozenset[str] = frozenset()


@dataclass(frozen=True)
class CellMark:
    row: str
    col: str
    kind: CellKind
    visibility: Visibility
    relations: tuple[tuple[str, Direction], ...]
    tooltip: str


@dataclass(frozen=True)
class NeighborhoodGraph:
    center: str
    neighbors: tuple[tuple[str, str, NeighborDirection], ...]


@dataclass(frozen=True)
class MatrixView:
    kb: KnowledgeBase = field(compare=False)
    forest: Forest
    placements: tuple[Placement, ...]
    rows: AxisState
    cols: AxisState
    selected: str | None
    cells: tuple[CellMark, ...]


def occurrence_depth(occurrence_id: str) -> int:
    # ids are /-joined paths and node ids cannot contain "/"
    return occurrence_id.count("/")


def in_subtree(occurrence_id: str, ancestor_id: str) -> bool:
    return occurrence_id == ancestor_id or occurrence_id.startswith(ancestor_id + "/")


def build_placements(kb: KnowledgeBase, forest: Forest) -> tuple[Placement, ...]:
    """Lift node-level relation edges and identity pairs onto occurrence slots."""
    placements: list[Placement] = []
    for inst in relation_edges(kb):
        if not isinstance(inst.target, NodeRef):
            continue
        source_occs = forest.identity.get(inst.source, ())
        target_occs = forest.identity.get(inst.target.id, ())
        meta = inst.multiplicity is Multiplicity.META
        unit = ("edge", inst.source, inst.relation, inst.target.id, inst.origin.value, meta)
        for p in source_occs:
            for q in target_occs:
                placements.append(
                    Placement(p, q, inst.relation, Direction.ROW_TO_COL, inst.origin, meta, unit)
                )
                placements.append(
                    Placement(q, p, inst.relation, Direction.COL_TO_ROW, inst.origin, meta, unit)
                )
    for p, q in identity_pairs(forest):
        unit = ("identity", p, q)
        placements.append(
            Placement(p, q, IDENTITY_RELATION, Direction.ROW_TO_COL, Origin.IDENTITY, False, unit)
        )
        placements.append(
            Placement(q, p, IDENTITY_RELATION, Direction.COL_TO_ROW, Origin.IDENTITY, False, unit)
        )
    return tuple(placements)


def is_visible(forest: Forest, state: AxisState, occurrence_id: str) -> bool:
    """Visible iff the root is shown and every strict ancestor is expanded."""
    occ = forest.occurrences[occurrence_id]
    while occ.parent is not None:
        if occ.parent not in state.expanded:
            return False
        occ = forest.occurrences[occ.parent]
    return occ.occurrence_id in state.visible_roots


def visible_occurrences(forest: Forest, state: AxisState) -> list[str]:
    """All visible occurrences of the axis in depth-first display order."""
    out: list[str] = []
    for root in state.visible_roots:
        stack = [root]
        while stack:
            occ_id = stack.pop()
            out.append(occ_id)
            if occ_id in state.expanded:
                stack.extend(reversed(forest.occurrences[occ_id].children))
    return out


def _visible_prefixes(forest: Forest, state: AxisState) -> dict[str, tuple[str, ...]]:
    """occurrence -> its visible ancestors-or-self, outermost first.

    The visible part of any root-to-occurrence path is a prefix, so this is
    computed top-down in one pass over the whole forest.
    """
    roots = set(state.visible_roots)
    prefixes: dict[str, tuple[str, ...]] = {}
    for occ_id in forest.occurrences:
        chain: list[str] = []
        occ = forest.occurrences[occ_id]
        while occ.parent is not None:
            chain.append(occ.occurrence_id)
            occ = forest.occurrences[occ.parent]
        chain.append(occ.occurrence_id)
        chain.reverse()
        if chain[0] not in roots:
            prefixes[occ_id] = ()
            continue
        vis = [chain[0]]
        for nxt in chain[1:]:
            if vis[-1] not in state.expanded:
                break
            vis.append(nxt)
        prefixes[occ_id] = tuple(vis)
    return prefixes


@dataclass
class _Bucket:
    direct: list[Placement] = field(default_factory=list)
    covered: list[Placement] = field(default_factory=list)
    units: set[tuple] = field(default_factory=set)
    shown_units: set[tuple] = field(default_factory=set)


def _bucket_pairs(view: MatrixView) -> dict[tuple[str, str], _Bucket]:
    row_prefix = _visible_prefixes(view.forest, view.rows)
    col_prefix = _visible_prefixes(view.forest, view.cols)
    buckets: dict[tuple[str, str], _Bucket] = {}
    for pl in view.placements:
        vr = row_prefix[pl.row]
        vc = col_prefix[pl.col]
        if not vr or not vc:
            continue
        shown = vr[-1] == pl.row and vc[-1] == pl.col
        for r in vr:
            for c in vc:
                bucket = buckets.get((r, c))
                if bucket is None:
                    bucket = buckets[(r, c)] = _Bucket()
                bucket.covered.append(pl)
                bucket.units.add(pl.unit)
                if r == pl.row and c == pl.col:
                    bucket.direct.append(pl)
                if shown:
                    bucket.shown_units.add(pl.unit)
    return buckets


def _mark_from_bucket(row: str, col: str, bucket: _Bucket) -> CellMark:
    if bucket.direct:
        visibility = Visibility.DIRECT
        basis = bucket.direct
    elif bucket.units - bucket.shown_units:
        visibility = Visibility.HIDDEN_BELOW
        basis = bucket.covered
    else:
        visibility = Visibility.REVEALED_BELOW
        basis = bucket.covered
    kind = (
        CellKind.EXPLICIT
        if any(pl.origin is Origin.DECLARED for pl in basis)
        else CellKind.IMPLICIT
    )
    relations = sorted(
        {(pl.relation, pl.direction) for pl in basis},
        key=lambda item: (item[0], _DIRECTION_ORDER[item[1]]),
    )
    meta_names = {pl.relation for pl in basis if pl.meta}
    names: list[str] = []
    for name, _ in relations:
        if name not in names:
            names.append(name)
    tooltip = ", ".join(
        name + (" (meta)" if name in meta_names else "") for name in names
    )
    return CellMark(row, col, kind, visibility, tuple(relations), tooltip)


def compute_cells(view: MatrixView) -> list[CellMark]:
    """Cell marks for all visible pairs, row-major, empty pairs omitted."""
    buckets = _bucket_pairs(view)
    cells: list[CellMark] = []
    for r in visible_occurrences(view.forest, view.rows):
        for c in visible_occurrences(view.forest, view.cols):
            bucket = buckets.get((r, c))
            if bucket is not None:
                cells.append(_mark_from_bucket(r, c, bucket))
    return cells


def _assemble(
    kb: KnowledgeBase,
    forest: Forest,
    placements: tuple[Placement, ...],
    rows: AxisState,
    cols: AxisState,
    selected: str | None,
) -> MatrixView:
    view = MatrixView(kb, forest, placements, rows, cols, selected, ())
    return MatrixView(kb, forest, placements, rows, cols, selected, tuple(compute_cells(view)))


def new_view(
    kb: KnowledgeBase,
    forest: Forest,
    row_roots: list[str] | None = None,
    col_roots: list[str] | None = None,
) -> MatrixView:
    """Fresh collapsed view; empty root lists mean every forest root."""

    def resolve(requested: list[str] | None) -> tuple[str, ...]:
        if not requested:
            return tuple(forest.roots)
        chosen: list[str] = []
        for node in requested:
            if node not in forest.roots:
                raise UnknownRoot(f"not a root of the forest: {node}")
            if node not in chosen:
                chosen.append(node)
        return tuple(chosen)

    placements = build_placements(kb, forest)
    return _assemble(
        kb,
        forest,
        placements,
        AxisState(resolve(row_roots)),
        AxisState(resolve(col_roots)),
        None,
    )


def _axis_state(view: MatrixView, axis: Axis) -> AxisState:
    return view.rows if axis is Axis.ROWS else view.cols


def _with_axis(view: MatrixView, axis: Axis, state: AxisState) -> MatrixView:
    rows = state if axis is Axis.ROWS else view.rows
    cols = state if axis is Axis.COLS else view.cols
    return _assemble(view.kb, view.forest, view.placements, rows, cols, view.selected)


def _require_visible(view: MatrixView, axis: Axis, occurrence_id: str) -> AxisState:
    if occurrence_id not in view.forest.occurrences:
        raise UnknownOccurrence(f"no such occurrence: {occurrence_id}")
    state = _axis_state(view, axis)
    if not is_visible(view.forest, state, occurrence_id):
        raise NotVisible(f"occurrence not visible on {axis.value}: {occurrence_id}")
    return state


def expand(view: MatrixView, axis: Axis, occurrence_id: str) -> MatrixView:
    state = _require_visible(view, axis, occurrence_id)
    if not view.forest.occurrences[occurrence_id].children:
        raise NotExpandable(f"occurrence has no children: {occurrence_id}")
    if occurrence_id in state.expanded:
        return view
    return _with_axis(
        view, axis, AxisState(state.visible_roots, state.expanded | {occurrence_id})
    )


def collapse(view: MatrixView, axis: Axis, occurrence_id: str) -> MatrixView:
    state = _require_visible(view, axis, occurrence_id)
    kept = frozenset(e for e in state.expanded if not in_subtree(e, occurrence_id))
    if kept == state.expanded:
        return view
    return _with_axis(view, axis, AxisState(state.visible_roots, kept))


def with_expansion(
    view: MatrixView,
    rows_expanded: frozenset[str] | set[str],
    cols_expanded: frozenset[str] | set[str],
) -> MatrixView:
    """Jump straight to an expansion state (state restore / replay).

    Equivalent to applying `expand` top-down for every member; the sets must
    therefore be ancestor-closed and name only occurrences with children.
    """
    for expanded in (rows_expanded, cols_expanded):
        for occurrence_id in expanded:
            occ = view.forest.occurrences.get(occurrence_id)
            if occ is None:
                raise UnknownOccurrence(f"no such occurrence: {occurrence_id}")
            if not occ.children:
                raise NotExpandable(f"occurrence has no children: {occurrence_id}")
            if occ.parent is not None and occ.parent not in expanded:
                raise NotVisible(f"ancestor not expanded: {occurrence_id}")
    return _assemble(
        view.kb,
        view.forest,
        view.placements,
        AxisState(view.rows.visible_roots, frozenset(rows_expanded)),
        AxisState(view.cols.visible_roots, frozenset(cols_expanded)),
        view.selected,
    )


def _find_mark(view: MatrixView, row: str, col: str) -> CellMark | None:
    for mark in view.cells:
        if mark.row == row and mark.col == col:
            return mark
    return None


def reveal(view: MatrixView, row: str, col: str) -> MatrixView:
    """Surface the shallowest hidden edge under a HiddenBelow cell."""
    mark = _find_mark(view, row, col)
    if mark is None or mark.visibility is not Visibility.HIDDEN_BELOW:
        raise NotHidden(f"cell is not hidden-below: ({row}, {col})")

    covered = [
        pl
        for pl in view.placements
        if in_subtree(pl.row, row) and in_subtree(pl.col, col)
    ]
    shown = {
        pl.unit
        for pl in covered
        if is_visible(view.forest, view.rows, pl.row)
        and is_visible(view.forest, view.cols, pl.col)
    }
    candidates = [pl for pl in covered if pl.unit not in shown]
    target = min(
        candidates,
        key=lambda pl: (
            occurrence_depth(pl.row) + occurrence_depth(pl.col),
            (pl.row, pl.col),
        ),
    )

    def expose(state: AxisState, occurrence_id: str) -> AxisState:
        ancestors = view.forest.ancestors_or_self(occurrence_id)[:-1]
        return AxisState(state.visible_roots, state.expanded | set(ancestors))

    return _assemble(
        view.kb,
        view.forest,
        view.placements,
        expose(view.rows, target.row),
        expose(view.cols, target.col),
        view.selected,
    )


def collapse_pair(view: MatrixView, row: str, col: str) -> MatrixView:
    mark = _find_mark(view, row, col)
    if mark is None or mark.visibility is not Visibility.REVEALED_BELOW:
        raise NotRevealed(f"cell is not revealed-below: ({row}, {col})")

    def retract(state: AxisState, occurrence_id: str) -> AxisState:
        kept = frozenset(e for e in state.expanded if not in_subtree(e, occurrence_id))
        return AxisState(state.visible_roots, kept)

    return _assemble(
        view.kb,
        view.forest,
        view.placements,
        retract(view.rows, row),
        retract(view.cols, col),
        view.selected,
    )


def select(view: MatrixView, node_id: str) -> MatrixView:
    if node_id not in view.kb.entities:
        raise UnknownNode(f"no such node: {node_id}")
    if node_id == view.selected:
        return view
    return _assemble(
        view.kb, view.forest, view.placements, view.rows, view.cols, node_id
    )


def deselect(view: MatrixView) -> MatrixView:
    if view.selected is None:
        return view
    return _assemble(view.kb, view.forest, view.placements, view.rows, view.cols, None)


_NEIGHBOR_ORDER = {NeighborDirection.OUT: 0, NeighborDirection.IN: 1}


def neighborhood(kb: KnowledgeBase, node_id: str) -> NeighborhoodGraph:
    """Everything one step away from a node, taxonomy included."""
    if node_id not in kb.entities:
        raise UnknownNode(f"no such node: {node_id}")
    found: set[tuple[str, str, NeighborDirection]] = set()
    for edge in taxonomic_edges(kb):
        if edge.child == node_id:
            found.add((edge.kind.value, edge.parent, NeighborDirection.OUT))
        if edge.parent == node_id:
            found.add((edge.kind.value, edge.child, NeighborDirection.IN))
    for inst in relation_edges(kb):
        if not isinstance(inst.target, NodeRef):
            continue
        if inst.source == node_id:
            found.add((inst.relation, inst.target.id, NeighborDirection.OUT))
        if inst.target.id == node_id:
            found.add((inst.relation, inst.source, NeighborDirection.IN))
    neighbors = sorted(found, key=lambda n: (n[0], n[1], _NEIGHBOR_ORDER[n[2]]))
    return NeighborhoodGraph(node_id, tuple(neighbors))


_KIND_PHRASE = {
    OccurrenceKind.SUBCLASS_OF: "subclass of",
    OccurrenceKind.INSTANCE_OF: "instance of",
    OccurrenceKind.PART_OF: "part of",
}


def node_tooltip(kb: KnowledgeBase, forest: Forest, occurrence_id: str) -> str:
    """Edge-kind line plus the relations that never form cells (literal
    values, or node values missing from the forest)."""
    occ = forest.occurrences.get(occurrence_id)
    if occ is None:
        raise UnknownOccurrence(f"no such occurrence: {occurrence_id}")
    if occ.kind is OccurrenceKind.ROOT:
        first = "root"
    elif occ.kind is OccurrenceKind.CYCLE_COPY:
        chain = [forest.occurrences[a].node for a in forest.ancestors_or_self(occ.parent)]
        first = "cycle copy of " + "/".join(chain)
    else:
        parent_node = forest.occurrences[occ.parent].node
        first = f"{_KIND_PHRASE[occ.kind]} {parent_node}"

    lines: list[tuple[str, str, str]] = []
    for inst in relation_edges(kb):
        if inst.source != occ.node:
            continue
        if isinstance(inst.target, NodeRef) and inst.target.id in forest.identity:
            continue
        rendered = render_value(inst.target)
        suffix = " (inherited)" if inst.origin is Origin.INHERITED else ""
        lines.append((inst.relation, rendered, f"{inst.relation} = {rendered}{suffix}"))
    lines.sort(key=lambda item: (item[0], item[1]))
    return "\n".join([first] + [line for _, _, line in lines])
