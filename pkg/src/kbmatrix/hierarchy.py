"""Unfold the taxonomic graph of a KB into strict trees.

Three situations arise. Disjoint trees pass through unchanged. A node with
several parents is duplicated under each parent occurrence, with the copies
linked by identity later. A cycle is cut by re-entering the path: the
repeated node gets one extra childless copy (a cycle copy) and the cycle's
designated break node becomes a root.

Every placement of a KB node in a tree is an Occurrence; the occurrence id
is the `/`-joined path of node ids from the root, each non-root segment
tagged `!s`/`!i`/`!p`/`!y` for its edge kind (subclass-of, instance-of,
part-of, cycle copy). Since duplicate (child, parent, kind) edges collapse
first, occurrence ids are unique.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

from .model import AttrMulti, AttrSingle, InstanceOf, KnowledgeBase, NodeRef, PART_OF, SubclassOf

DEFAULT_MAX_OCCURRENCES = 100_000


class TaxonomicKind(Enum):
    SUBCLASS_OF = "subclassOf"
    INSTANCE_OF = "instanceOf"
    PART_OF = "partOf"


_KIND_ORDER = {
    TaxonomicKind.SUBCLASS_OF: 0,
    TaxonomicKind.INSTANCE_OF: 1,
    TaxonomicKind.PART_OF: 2,
}

_KIND_LETTER = {
    TaxonomicKind.SUBCLASS_OF: "s",
    TaxonomicKind.INSTANCE_OF: "i",
    TaxonomicKind.PART_OF: "p",
}


class OccurrenceKind(Enum):
    ROOT = "root"
    SUBCLASS_OF = "subclassOf"
    INSTANCE_OF = "instanceOf"
    PART_OF = "partOf"
    CYCLE_COPY = "cycleCopy"


_OCC_KIND = {
    TaxonomicKind.SUBCLASS_OF: OccurrenceKind.SUBCLASS_OF,
    TaxonomicKind.INSTANCE_OF: OccurrenceKind.INSTANCE_OF,
    TaxonomicKind.PART_OF: OccurrenceKind.PART_OF,
}


@dataclass(frozen=True)
class TaxonomicEdge:
    """child -> parent; for part-of the part is the child, the whole the parent."""

    child: str
    parent: str
    kind: TaxonomicKind


@dataclass(frozen=True)
class CyclicComponent:
    members: frozenset[str]
    break_node: str


@dataclass(frozen=True)
class Occurrence:
    occurrence_id: str
    node: str
    parent: str | None
    children: tuple[str, ...]
    kind: OccurrenceKind


@dataclass
class Forest:
    roots: list[str]
    occurrences: dict[str, Occurrence]
    identity: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def depth(self, occurrence_id: str) -> int:
        depth = 0
        occ = self.occurrences[occurrence_id]
        while occ.parent is not None:
            occ = self.occurrences[occ.parent]
            depth += 1
        return depth

    def ancestors_or_self(self, occurrence_id: str) -> list[str]:
        """Path from the root down to the occurrence itself."""
        chain = [occurrence_id]
        occ = self.occurrences[occurrence_id]
        while occ.parent is not None:
            chain.append(occ.parent)
            occ = self.occurrences[occ.parent]
        chain.reverse()
        return chain


class UnfoldOverflowError(OverflowError):
    """Unfolding would exceed the occurrence budget (DAG duplication is
    exponential in depth, so this fails loudly instead of hanging)."""

    def __init__(self, count: int, limit: int):
        super().__init__(f"unfolding exceeds {limit} occurrences")
        self.count = count
        self.limit = limit


def taxonomic_edges(kb: KnowledgeBase) -> list[TaxonomicEdge]:
    """Taxonomic edges of the KB, duplicates collapsed, sorted."""
    edges: set[TaxonomicEdge] = set()
    for fact in kb.facts:
        if isinstance(fact, SubclassOf):
            edges.add(TaxonomicEdge(fact.child, fact.parent, TaxonomicKind.SUBCLASS_OF))
        elif isinstance(fact, InstanceOf):
            edges.add(TaxonomicEdge(fact.instance, fact.class_id, TaxonomicKind.INSTANCE_OF))
        elif isinstance(fact, AttrSingle) and fact.relation == PART_OF:
            if isinstance(fact.value, NodeRef):
                edges.add(TaxonomicEdge(fact.subject, fact.value.id, TaxonomicKind.PART_OF))
        elif isinstance(fact, AttrMulti) and fact.relation == PART_OF:
            for value in fact.values:
                if isinstance(value, NodeRef):
                    edges.add(TaxonomicEdge(fact.subject, value.id, TaxonomicKind.PART_OF))
    return sorted(edges, key=lambda e: (e.child, e.parent, _KIND_ORDER[e.kind]))


def _children_index(edges: list[TaxonomicEdge]) -> dict[str, list[tuple[str, TaxonomicKind]]]:
    index: dict[str, list[tuple[str, TaxonomicKind]]] = {}
    for edge in edges:
        index.setdefault(edge.parent, []).append((edge.child, edge.kind))
    for bucket in index.values():
        bucket.sort(key=lambda item: (item[0], _KIND_ORDER[item[1]]))
    return index


def _descend(seeds: list[str], children: dict[str, list[tuple[str, TaxonomicKind]]]) -> set[str]:
    reached = set(seeds)
    stack = list(seeds)
    while stack:
        node = stack.pop()
        for child, _ in children.get(node, ()):
            if child not in reached:
                reached.add(child)
                stack.append(child)
    return reached


def _strongly_connected(nodes: list[str], succ: dict[str, list[str]]) -> list[set[str]]:
    """Tarjan's algorithm, iterative to survive long chains."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[set[str]] = []
    counter = 0

    for start in nodes:
        if start in index:
            continue
        work = [(start, iter(succ.get(start, ())))]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, successors = work[-1]
            advanced = False
            for nxt in successors:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ.get(nxt, ()))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component: set[str] = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                components.append(component)
    return components


def find_roots(
    edges: list[TaxonomicEdge], all_nodes: set[str]
) -> tuple[list[str], list[CyclicComponent]]:
    """Parentless nodes plus the cyclic components that need a break node.

    A node with no parent is a root (isolated nodes included). Whatever the
    roots cannot reach by descending lies under cycles; for each such cycle
    at the top of its region the lexicographically smallest member is chosen
    as the break node, which unfold_forest treats as an additional root.
    """
    has_parent = {edge.child for edge in edges}
    roots = sorted(node for node in all_nodes if node not in has_parent)

    children = _children_index(edges)
    covered = _descend(roots, children)
    uncovered = sorted(all_nodes - covered)
    if not uncovered:
        return roots, []

    parents: dict[str, list[str]] = {}
    self_loop: set[str] = set()
    for edge in edges:
        parents.setdefault(edge.child, []).append(edge.parent)
        if edge.child == edge.parent:
            self_loop.add(edge.child)

    cyclic: list[CyclicComponent] = []
    for component in _strongly_connected(uncovered, parents):
        if len(component) < 2 and not (component & self_loop):
            continue
        external = any(
            parent not in component
            for member in component
            for parent in parents.get(member, ())
        )
        if external:
            continue  # covered by descending from the cycle above it
        cyclic.append(CyclicComponent(frozenset(component), min(component)))
    cyclic.sort(key=lambda c: c.break_node)
    return roots, cyclic


def unfold_forest(
    kb: KnowledgeBase, max_occurrences: int = DEFAULT_MAX_OCCURRENCES
) -> Forest:
    """Depth-first unfolding of the taxonomic graph into strict trees.

    Each occurrence expands to one child occurrence per taxonomic edge into
    its node, except that an edge whose child already lies on the path from
    the root becomes a childless cycle-copy occurrence.
    """
    edges = taxonomic_edges(kb)
    roots, cyclic = find_roots(edges, set(kb.entities))
    children = _children_index(edges)

    order = roots + [component.break_node for component in cyclic]
    occurrences: dict[str, Occurrence] = {}
    root_ids: list[str] = []

    def register(occ: Occurrence) -> None:
        if len(occurrences) >= max_occurrences:
            raise UnfoldOverflowError(len(occurrences) + 1, max_occurrences)
        occurrences[occ.occurrence_id] = occ

    for root in order:
        root_ids.append(root)
        # stack of (occurrence id, node, nodes on the path from the root)
        stack: list[tuple[str, str, frozenset[str]]] = [(root, root, frozenset({root}))]
        pending: dict[str, tuple[str | None, OccurrenceKind]] = {root: (None, OccurrenceKind.ROOT)}
        while stack:
            occ_id, node, path = stack.pop()
            parent, kind = pending.pop(occ_id)
            child_ids: list[str] = []
            to_push: list[tuple[str, str, frozenset[str]]] = []
            for child, edge_kind in children.get(node, ()):
                if child in path:
                    copy_id = f"{occ_id}/{child}!y"
                    if copy_id not in occurrences:
                        child_ids.append(copy_id)
                        register(
                            Occurrence(copy_id, child, occ_id, (), OccurrenceKind.CYCLE_COPY)
                        )
                    continue
                child_id = f"{occ_id}/{child}!{_KIND_LETTER[edge_kind]}"
                child_ids.append(child_id)
                pending[child_id] = (occ_id, _OCC_KIND[edge_kind])
                to_push.append((child_id, child, path | {child}))
            register(Occurrence(occ_id, node, parent, tuple(child_ids), kind))
            stack.extend(reversed(to_push))

    identity: dict[str, list[str]] = {}
    for occ in occurrences.values():
        identity.setdefault(occ.node, []).append(occ.occurrence_id)
    return Forest(
        roots=root_ids,
        occurrences=occurrences,
        identity={node: tuple(sorted(ids)) for node, ids in sorted(identity.items())},
    )


def identity_pairs(forest: Forest) -> list[tuple[str, str]]:
    """All unordered pairs of distinct occurrences of the same node."""
    pairs: list[tuple[str, str]] = []
    for ids in forest.identity.values():
        pairs.extend(combinations(ids, 2))
    return sorted(pairs)


def forest_to_dict(forest: Forest) -> dict:
    """JSON-ready view of a forest with fully deterministic ordering."""
    return {
        "roots": list(forest.roots),
        "occurrences": {
            occ_id: {
                "node": occ.node,
                "parent": occ.parent,
                "children": list(occ.children),
                "kind": occ.kind.value,
            }
            for occ_id, occ in sorted(forest.occurrences.items())
        },
        "identity": {node: list(ids) for node, ids in sorted(forest.identity.items())},
    }
