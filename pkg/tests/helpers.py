"""Shared generators and independent oracles for the test suite.

The oracles deliberately avoid the library's algorithms: inheritance is
resolved by enumerating all simple superclass paths, subtree membership in
the cell oracle walks parent pointers instead of trusting occurrence-id
prefixes, and cells are classified with literal double loops.
"""

from __future__ import annotations

import random
from decimal import Decimal

from kbmatrix.hierarchy import Forest, OccurrenceKind
from kbmatrix.model import (
    AttrMulti,
    AttrSingle,
    Fact,
    InstanceOf,
    KnowledgeBase,
    MetaSignature,
    Multiplicity,
    NodeRef,
    NumberLiteral,
    Origin,
    RelationInstance,
    SubclassOf,
    TextLiteral,
    render_value,
    relation_edges,
)

# ---------------------------------------------------------------- generators

NODE_POOL = [
    "a", "b", "c", "d", "e", "f", "g", "h",
    "k1", "k2", "m_1", "m_2", "node9", "_x", "zz", "Q",
]
RELATION_POOL = ["knows", "likes", "uses", "near", "sees", "owns", "r_1", "rel2"]


def random_value(rng: random.Random, node_ids: list[str]):
    roll = rng.random()
    if roll < 0.6:
        return NodeRef(rng.choice(node_ids))
    if roll < 0.8:
        text = "".join(rng.choice("abc xyz_09\\'!") for _ in range(rng.randint(0, 6)))
        return TextLiteral(text)
    whole = rng.randint(-999, 999)
    if rng.random() < 0.5:
        return NumberLiteral(Decimal(whole))
    return NumberLiteral(Decimal(f"{whole}.{rng.randint(0, 99):02d}"))


def random_facts(
    rng: random.Random,
    max_nodes: int = 8,
    max_taxonomy: int = 6,
    max_relations: int = 8,
    allow_cycles: bool = True,
) -> list[Fact]:
    """Random fact list that always passes validation's error check
    (duplicate single-valued declarations reuse the first value)."""
    nodes = rng.sample(NODE_POOL, rng.randint(2, max_nodes))
    facts: list[Fact] = []

    part_of_subjects: set[str] = set()
    for _ in range(rng.randint(0, max_taxonomy)):
        child, parent = rng.choice(nodes), rng.choice(nodes)
        if child == parent:
            continue
        if not allow_cycles and nodes.index(parent) >= nodes.index(child):
            continue
        roll = rng.random()
        if roll < 0.45:
            facts.append(SubclassOf(child, parent))
        elif roll < 0.75:
            facts.append(InstanceOf(child, parent))
        elif child in part_of_subjects:
            # a second single-valued partOf on one subject would be a
            # validation conflict; extra parents use the multi form
            facts.append(AttrMulti(child, "partOf", (NodeRef(parent),)))
        else:
            part_of_subjects.add(child)
            facts.append(AttrSingle(child, "partOf", NodeRef(parent)))

    single_values: dict[tuple[str, str], object] = {}
    for _ in range(rng.randint(0, max_relations)):
        subject = rng.choice(nodes)
        relation = rng.choice(RELATION_POOL)
        roll = rng.random()
        if roll < 0.6:
            key = (subject, relation)
            value = single_values.setdefault(key, random_value(rng, nodes))
            facts.append(AttrSingle(subject, relation, value))
        elif roll < 0.85:
            values = tuple(
                random_value(rng, nodes) for _ in range(rng.randint(1, 3))
            )
            facts.append(AttrMulti(subject, relation, values))
        else:
            facts.append(MetaSignature(subject, relation, rng.choice(nodes)))
    return facts


def random_kb(rng: random.Random, **kwargs) -> KnowledgeBase:
    return KnowledgeBase.from_facts(random_facts(rng, **kwargs))


def random_class_dag_kb(rng: random.Random, max_classes: int = 10, max_instances: int = 15) -> KnowledgeBase:
    """Acyclic class graph with attribute declarations plus plain instances."""
    class_count = rng.randint(1, max_classes)
    classes = [f"c{i}" for i in range(class_count)]
    facts: list[Fact] = []
    for i, cls in enumerate(classes):
        if i == 0:
            continue
        for parent in rng.sample(classes[:i], rng.randint(0, min(2, i))):
            facts.append(SubclassOf(cls, parent))
    for cls in classes:
        for _ in range(rng.randint(0, 2)):
            relation = rng.choice(RELATION_POOL)
            facts.append(AttrSingle(cls, relation, random_value(rng, classes)))
    instances = [f"i{j}" for j in range(rng.randint(1, max_instances))]
    for inst in instances:
        for cls in rng.sample(classes, rng.randint(1, min(2, class_count))):
            facts.append(InstanceOf(inst, cls))
        if rng.random() < 0.3:
            facts.append(AttrSingle(inst, rng.choice(RELATION_POOL), random_value(rng, classes)))

    # drop later single-valued declarations that clash with an earlier value
    seen: dict[tuple[str, str], object] = {}
    cleaned: list[Fact] = []
    for fact in facts:
        if isinstance(fact, AttrSingle):
            key = (fact.subject, fact.relation)
            if key in seen and seen[key] != fact.value:
                continue
            seen.setdefault(key, fact.value)
        cleaned.append(fact)
    return KnowledgeBase.from_facts(cleaned)


def random_strict_forest_facts(rng: random.Random, max_nodes: int = 30) -> list[Fact]:
    """Taxonomy that is already a forest: every node has at most one parent,
    edges always point to an earlier node, so no cycles."""
    count = rng.randint(1, max_nodes)
    names = [f"n{i:02d}" for i in range(count)]
    rng.shuffle(names)
    facts: list[Fact] = []
    for i, name in enumerate(names):
        if i == 0 or rng.random() < 0.25:
            continue  # a root
        parent = names[rng.randrange(i)]
        roll = rng.random()
        if roll < 0.4:
            facts.append(SubclassOf(name, parent))
        elif roll < 0.7:
            facts.append(InstanceOf(name, parent))
        else:
            facts.append(AttrSingle(name, "partOf", NodeRef(parent)))
    return facts


def cycle_chain_text(names: list[str]) -> str:
    """Pure part-of cycle through the given nodes, each part of the next."""
    lines = []
    for i, name in enumerate(names):
        whole = names[(i + 1) % len(names)]
        lines.append(f"{name}[partOf -> {whole}].")
    return "".join(line + "\n" for line in lines)


# ------------------------------------------------------------------- oracles


def oracle_inherited(kb: KnowledgeBase) -> list[RelationInstance]:
    """Brute-force nearest-declaration closure via all simple superclass paths."""
    parents: dict[str, list[str]] = {}
    for fact in kb.facts:
        if isinstance(fact, SubclassOf):
            bucket = parents.setdefault(fact.child, [])
            if fact.parent not in bucket:
                bucket.append(fact.parent)

    decls: dict[str, dict[str, list[Fact]]] = {}
    for fact in kb.facts:
        if isinstance(fact, (AttrSingle, AttrMulti, MetaSignature)) and fact.relation != "partOf":
            decls.setdefault(fact.subject, {}).setdefault(fact.relation, []).append(fact)

    direct: dict[str, list[str]] = {}
    for fact in kb.facts:
        if isinstance(fact, InstanceOf):
            bucket = direct.setdefault(fact.instance, [])
            if fact.class_id not in bucket:
                bucket.append(fact.class_id)

    def expand_fact(fact: Fact, source: str) -> list[RelationInstance]:
        if isinstance(fact, AttrSingle):
            return [RelationInstance(source, fact.relation, fact.value, Origin.INHERITED, Multiplicity.SINGLE)]
        if isinstance(fact, AttrMulti):
            return [
                RelationInstance(source, fact.relation, v, Origin.INHERITED, Multiplicity.MULTI)
                for v in fact.values
            ]
        return [
            RelationInstance(
                source, fact.relation, NodeRef(fact.range_id), Origin.INHERITED, Multiplicity.META
            )
        ]

    out: set[RelationInstance] = set()
    for instance, direct_classes in direct.items():
        # min depth per reachable class, via exhaustive simple-path enumeration
        depths: dict[str, int] = {}

        def walk(cls: str, depth: int, path: frozenset[str]) -> None:
            if cls not in depths or depth < depths[cls]:
                depths[cls] = depth
            for parent in parents.get(cls, ()):
                if parent not in path:
                    walk(parent, depth + 1, path | {parent})

        for cls in direct_classes:
            walk(cls, 0, frozenset({cls}))

        own = set(decls.get(instance, ()))
        relations = {
            relation
            for cls in depths
            for relation in decls.get(cls, ())
            if relation not in own
        }
        for relation in relations:
            winner = min(
                (depths[cls], cls)
                for cls in depths
                if relation in decls.get(cls, ())
            )
            for fact in decls[winner[1]][relation]:
                out.update(expand_fact(fact, instance))
    return sorted(
        out,
        key=lambda r: (r.source, r.relation, render_value(r.target), r.origin.value, r.multiplicity.value),
    )


def occ_ancestors_or_self(forest: Forest, occ_id: str) -> list[str]:
    chain = [occ_id]
    while forest.occurrences[chain[-1]].parent is not None:
        chain.append(forest.occurrences[chain[-1]].parent)
    return chain


def occ_under(forest: Forest, occ_id: str, ancestor: str) -> bool:
    """Subtree membership by walking parent pointers, not id prefixes."""
    return ancestor in occ_ancestors_or_self(forest, occ_id)


def occ_visible(forest: Forest, visible_roots, expanded, occ_id: str) -> bool:
    chain = occ_ancestors_or_self(forest, occ_id)
    if chain[-1] not in visible_roots:
        return False
    return all(anc in expanded for anc in chain[1:])


def oracle_placements(kb: KnowledgeBase, forest: Forest):
    """(row occ, col occ, relation, direction, origin is declared, unit)."""
    placements = []
    for inst in relation_edges(kb):
        if not isinstance(inst.target, NodeRef):
            continue
        unit = ("edge", inst.source, inst.relation, render_value(inst.target), inst.origin.value, inst.multiplicity.value)
        for p in forest.identity.get(inst.source, ()):
            for q in forest.identity.get(inst.target.id, ()):
                placements.append((p, q, inst.relation, "rowToCol", inst.origin is Origin.DECLARED, unit))
                placements.append((q, p, inst.relation, "colToRow", inst.origin is Origin.DECLARED, unit))
    for node, occs in forest.identity.items():
        ordered = sorted(occs)
        for i, p in enumerate(ordered):
            for q in ordered[i + 1:]:
                unit = ("identity", p, q)
                placements.append((p, q, "identity", "rowToCol", False, unit))
                placements.append((q, p, "identity", "colToRow", False, unit))
    return placements


def oracle_cells(kb: KnowledgeBase, forest: Forest, rows_state, cols_state):
    """Naive double-loop cell classification.

    Returns {(row occ, col occ): (kind, visibility, relations tuple)} using
    the wire spellings, for every visible pair that gets a mark.
    """
    placements = oracle_placements(kb, forest)

    def visible_list(state):
        out = []
        for root in state.visible_roots:
            stack = [root]
            while stack:
                occ = stack.pop()
                out.append(occ)
                if occ in state.expanded:
                    stack.extend(reversed(forest.occurrences[occ].children))
        return out

    rows = visible_list(rows_state)
    cols = visible_list(cols_state)
    row_vis = {
        o for o in forest.occurrences
        if occ_visible(forest, set(rows_state.visible_roots), rows_state.expanded, o)
    }
    col_vis = {
        o for o in forest.occurrences
        if occ_visible(forest, set(cols_state.visible_roots), cols_state.expanded, o)
    }

    result = {}
    for r in rows:
        for c in cols:
            direct = [pl for pl in placements if pl[0] == r and pl[1] == c]
            covered = [
                pl for pl in placements
                if occ_under(forest, pl[0], r) and occ_under(forest, pl[1], c)
            ]
            if not covered:
                continue
            if direct:
                visibility = "direct"
                basis = direct
            else:
                shown_units = {
                    pl[5] for pl in covered if pl[0] in row_vis and pl[1] in col_vis
                }
                all_units = {pl[5] for pl in covered}
                visibility = "revealedBelow" if all_units == shown_units else "hiddenBelow"
                basis = covered
            kind = "explicit" if any(pl[4] for pl in basis) else "implicit"
            relations = tuple(
                sorted(
                    {(pl[2], pl[3]) for pl in basis},
                    key=lambda item: (item[0], 0 if item[1] == "rowToCol" else 1),
                )
            )
            result[(r, c)] = (kind, visibility, relations)
    return result


def realized_taxonomy(forest: Forest, input_edges) -> set[tuple[str, str, str]]:
    """Edges actually materialized by the unfolding, as (child, parent, kind)
    node triples; cycle copies count as every input kind linking the pair."""
    by_pair: dict[tuple[str, str], set[str]] = {}
    for edge in input_edges:
        by_pair.setdefault((edge.child, edge.parent), set()).add(edge.kind.value)
    realized: set[tuple[str, str, str]] = set()
    for occ in forest.occurrences.values():
        if occ.parent is None:
            continue
        parent_node = forest.occurrences[occ.parent].node
        if occ.kind is OccurrenceKind.CYCLE_COPY:
            for kind in by_pair.get((occ.node, parent_node), ()):
                realized.add((occ.node, parent_node, kind))
        else:
            realized.add((occ.node, parent_node, occ.kind.value))
    return realized


# ---------------------------------------------------------- expansion states


def count_expansion_states(forest: Forest) -> int:
    """Number of reachable expansion sets for one axis showing all roots."""

    def count(occ_id: str) -> int:
        children = forest.occurrences[occ_id].children
        if not children:
            return 1
        product = 1
        for child in children:
            product *= count(child)
        return 1 + product

    total = 1
    for root in forest.roots:
        total *= count(root)
    return total


def enumerate_expansion_sets(forest: Forest):
    """All ancestor-closed expanded sets for one axis (exponential; call only
    after checking count_expansion_states)."""

    def per_occ(occ_id: str) -> list[frozenset[str]]:
        children = forest.occurrences[occ_id].children
        if not children:
            return [frozenset()]
        options = [frozenset()]
        child_sets = [per_occ(child) for child in children]
        combos = [frozenset({occ_id})]
        for sets in child_sets:
            combos = [base | extra for base in combos for extra in sets]
        options.extend(combos)
        return options

    sets = [frozenset()]
    for root in forest.roots:
        sets = [base | extra for base in sets for extra in per_occ(root)]
    return sets


def random_expansion_set(rng: random.Random, forest: Forest) -> frozenset[str]:
    expanded: set[str] = set()
    stack = list(forest.roots)
    while stack:
        occ_id = stack.pop()
        occ = forest.occurrences[occ_id]
        if occ.children and rng.random() < 0.6:
            expanded.add(occ_id)
            stack.extend(occ.children)
    return frozenset(expanded)
