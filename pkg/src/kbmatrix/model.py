"""In-memory knowledge-base model.

A knowledge base is a set of entities (nodes) plus an ordered list of facts.
Taxonomic facts (subclass-of, instance-of, part-of) shape the hierarchies;
everything else is an attribute relation that either links two nodes or
attaches a literal to a node. Instances pick up the relations declared on
their classes; `resolve_inherited` flattens that into an explicit edge set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
import re

ID_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Reserved attribute name whose node values are taxonomic, never relation edges.
PART_OF = "partOf"


def is_valid_id(value: str) -> bool:
    return bool(ID_PATTERN.match(value))


class Role(Enum):
    CLASS = "class"
    INSTANCE = "instance"


@dataclass(frozen=True)
class Entity:
    """A node in the network.

    `declared` is True when the id appears as a statement subject; ids that
    only occur as attribute values still become entities (they are nodes),
    just undeclared ones.
    """

    id: str
    roles: frozenset[Role] = frozenset()
    declared: bool = False


@dataclass(frozen=True)
class NodeRef:
    id: str


@dataclass(frozen=True)
class TextLiteral:
    text: str


@dataclass(frozen=True)
class NumberLiteral:
    value: Decimal


Value = NodeRef | TextLiteral | NumberLiteral


def render_value(value: Value) -> str:
    """Canonical display form of a value, as it appears in KB text."""
    if isinstance(value, NodeRef):
        return value.id
    if isinstance(value, TextLiteral):
        return '"' + value.text.replace('"', '\\"') + '"'
    return str(value.value)


@dataclass(frozen=True)
class SubclassOf:
    child: str
    parent: str


@dataclass(frozen=True)
class InstanceOf:
    instance: str
    class_id: str


@dataclass(frozen=True)
class AttrSingle:
    subject: str
    relation: str
    value: Value


@dataclass(frozen=True)
class AttrMulti:
    subject: str
    relation: str
    values: tuple[Value, ...]


@dataclass(frozen=True)
class MetaSignature:
    """Class-level signature: values of `relation` should belong to `range_id`."""

    subject: str
    relation: str
    range_id: str


Fact = SubclassOf | InstanceOf | AttrSingle | AttrMulti | MetaSignature

# Canonical statement-kind order used by the serializer and fact sort keys.
_FACT_KIND_ORDER = {SubclassOf: 0, InstanceOf: 1, MetaSignature: 2, AttrSingle: 3, AttrMulti: 4}


def fact_subject(fact: Fact) -> str:
    if isinstance(fact, SubclassOf):
        return fact.child
    if isinstance(fact, InstanceOf):
        return fact.instance
    return fact.subject


def fact_sort_key(fact: Fact) -> tuple:
    """Total order over facts: kind, subject, relation/parent, then values."""
    kind = _FACT_KIND_ORDER[type(fact)]
    if isinstance(fact, SubclassOf):
        return (kind, fact.child, fact.parent)
    if isinstance(fact, InstanceOf):
        return (kind, fact.instance, fact.class_id)
    if isinstance(fact, MetaSignature):
        return (kind, fact.subject, fact.relation, fact.range_id)
    if isinstance(fact, AttrSingle):
        return (kind, fact.subject, fact.relation, render_value(fact.value))
    return (kind, fact.subject, fact.relation, tuple(sorted(render_value(v) for v in fact.values)))


@dataclass
class KnowledgeBase:
    """Entities plus declared facts, in source order.

    `positions` (parser-filled) maps fact index -> (line, column) of the fact
    in the source text; it is diagnostic metadata and excluded from equality.
    """

    entities: dict[str, Entity] = field(default_factory=dict)
    facts: list[Fact] = field(default_factory=list)
    positions: list[tuple[int, int]] = field(default_factory=list, compare=False)

    @classmethod
    def from_facts(cls, facts: list[Fact]) -> KnowledgeBase:
        """Build a KB from facts alone, deriving the entity table."""
        kb = cls(facts=list(facts))
        kb.entities = derive_entities(kb.facts)
        return kb

    def node_ids(self) -> list[str]:
        return sorted(self.entities)


def _value_node_ids(value: Value) -> list[str]:
    return [value.id] if isinstance(value, NodeRef) else []


def derive_entities(facts: list[Fact]) -> dict[str, Entity]:
    """Entity table implied by a fact list: ids, roles, declared flags.

    Roles come only from taxonomy: both ends of subclass-of are classes; an
    instance-of makes its subject an instance and its class a class.
    """
    roles: dict[str, set[Role]] = {}
    declared: set[str] = set()
    mentioned: set[str] = set()

    def touch(node_id: str) -> None:
        mentioned.add(node_id)
        roles.setdefault(node_id, set())

    for fact in facts:
        subject = fact_subject(fact)
        touch(subject)
        declared.add(subject)
        if isinstance(fact, SubclassOf):
            touch(fact.parent)
            roles[fact.child].add(Role.CLASS)
            roles[fact.parent].add(Role.CLASS)
        elif isinstance(fact, InstanceOf):
            touch(fact.class_id)
            roles[fact.instance].add(Role.INSTANCE)
            roles[fact.class_id].add(Role.CLASS)
        elif isinstance(fact, MetaSignature):
            touch(fact.range_id)
        elif isinstance(fact, AttrSingle):
            for node_id in _value_node_ids(fact.value):
                touch(node_id)
        else:
            for value in fact.values:
                for node_id in _value_node_ids(value):
                    touch(node_id)

    return {
        node_id: Entity(node_id, frozenset(roles[node_id]), node_id in declared)
        for node_id in sorted(mentioned)
    }


def canonical_fact(fact: Fact) -> Fact:
    """Fact with insignificant ordering removed (multi-values sorted)."""
    if isinstance(fact, AttrMulti):
        return AttrMulti(fact.subject, fact.relation, tuple(sorted(fact.values, key=render_value)))
    return fact


def structurally_equal(a: KnowledgeBase, b: KnowledgeBase) -> bool:
    """Set-semantics equality: same entities, same canonical fact multiset."""
    facts_a = sorted((canonical_fact(f) for f in a.facts), key=fact_sort_key)
    facts_b = sorted((canonical_fact(f) for f in b.facts), key=fact_sort_key)
    return a.entities == b.entities and facts_a == facts_b


class Origin(Enum):
    DECLARED = "declared"
    INHERITED = "inherited"
    IDENTITY = "identity"


class Multiplicity(Enum):
    SINGLE = "single"
    MULTI = "multi"
    META = "meta"


@dataclass(frozen=True)
class RelationInstance:
    """One resolved directed relationship edge."""

    source: str
    relation: str
    target: Value
    origin: Origin
    multiplicity: Multiplicity


def _relation_sort_key(inst: RelationInstance) -> tuple:
    return (
        inst.source,
        inst.relation,
        render_value(inst.target),
        inst.origin.value,
        inst.multiplicity.value,
    )


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    fact_index: int
    severity: str = "warning"


CONFLICT_SINGLE_VALUED = "ConflictSingleValued"
SELF_TAXONOMIC_EDGE = "SelfTaxonomicEdge"
META_ON_NON_CLASS = "MetaOnNonClass"


def validate(kb: KnowledgeBase) -> list[Diagnostic]:
    """Check a parsed KB; an empty result means clean.

    Only ConflictSingleValued is an error that blocks downstream processing;
    the other codes are warnings and processing continues.
    """
    diagnostics: list[Diagnostic] = []
    first_single: dict[tuple[str, str], Value] = {}

    for index, fact in enumerate(kb.facts):
        if isinstance(fact, AttrSingle):
            key = (fact.subject, fact.relation)
            if key in first_single:
                if first_single[key] != fact.value:
                    diagnostics.append(
                        Diagnostic(
                            CONFLICT_SINGLE_VALUED,
                            f"conflicting single-valued relation {fact.relation!r} on "
                            f"{fact.subject!r}: {render_value(first_single[key])} vs "
                            f"{render_value(fact.value)}",
                            index,
                            severity="error",
                        )
                    )
            else:
                first_single[key] = fact.value

        if _is_self_taxonomic(fact):
            diagnostics.append(
                Diagnostic(
                    SELF_TAXONOMIC_EDGE,
                    f"taxonomic self-edge on {fact_subject(fact)!r}",
                    index,
                )
            )

        if isinstance(fact, MetaSignature):
            entity = kb.entities.get(fact.subject)
            if entity is None or Role.CLASS not in entity.roles:
                diagnostics.append(
                    Diagnostic(
                        META_ON_NON_CLASS,
                        f"meta signature {fact.relation!r} on {fact.subject!r}, "
                        "which is not a class",
                        index,
                    )
                )

    return diagnostics


def _is_self_taxonomic(fact: Fact) -> bool:
    if isinstance(fact, SubclassOf):
        return fact.child == fact.parent
    if isinstance(fact, InstanceOf):
        return fact.instance == fact.class_id
    if isinstance(fact, AttrSingle) and fact.relation == PART_OF:
        return fact.value == NodeRef(fact.subject)
    if isinstance(fact, AttrMulti) and fact.relation == PART_OF:
        return NodeRef(fact.subject) in fact.values
    return False


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def _declarations_by_class(kb: KnowledgeBase) -> dict[str, dict[str, list[Fact]]]:
    """subject -> relation name -> declaring facts, partOf excluded."""
    table: dict[str, dict[str, list[Fact]]] = {}
    for fact in kb.facts:
        if isinstance(fact, (AttrSingle, AttrMulti, MetaSignature)) and fact.relation != PART_OF:
            table.setdefault(fact.subject, {}).setdefault(fact.relation, []).append(fact)
    return table


def _superclasses(kb: KnowledgeBase) -> dict[str, list[str]]:
    parents: dict[str, list[str]] = {}
    for fact in kb.facts:
        if isinstance(fact, SubclassOf):
            bucket = parents.setdefault(fact.child, [])
            if fact.parent not in bucket:
                bucket.append(fact.parent)
    return parents


def _fact_instances(fact: Fact, source: str, origin: Origin) -> list[RelationInstance]:
    if isinstance(fact, AttrSingle):
        return [RelationInstance(source, fact.relation, fact.value, origin, Multiplicity.SINGLE)]
    if isinstance(fact, AttrMulti):
        return [
            RelationInstance(source, fact.relation, value, origin, Multiplicity.MULTI)
            for value in fact.values
        ]
    assert isinstance(fact, MetaSignature)
    return [
        RelationInstance(source, fact.relation, NodeRef(fact.range_id), origin, Multiplicity.META)
    ]


def resolve_inherited(kb: KnowledgeBase) -> list[RelationInstance]:
    """Flatten class-declared relations onto instances.

    For each instance, each relation name resolves to the nearest declaring
    class up the subclass graph (breadth-first from the instance's direct
    classes; ties at equal depth go to the lexicographically smallest class).
    A relation declared directly on the instance suppresses inheritance of
    that name. Superclass cycles are tolerated: each class is visited at most
    once per instance.
    """
    declarations = _declarations_by_class(kb)
    parents = _superclasses(kb)

    direct_classes: dict[str, list[str]] = {}
    for fact in kb.facts:
        if isinstance(fact, InstanceOf):
            bucket = direct_classes.setdefault(fact.instance, [])
            if fact.class_id not in bucket:
                bucket.append(fact.class_id)

    results: set[RelationInstance] = set()
    for instance in sorted(direct_classes):
        own_relations = set(declarations.get(instance, ()))
        # relation name -> (depth, class id) of the best declaration seen
        winners: dict[str, tuple[int, str]] = {}
        frontier = sorted(direct_classes[instance])
        seen = set(frontier)
        depth = 0
        while frontier:
            for class_id in frontier:
                for relation in declarations.get(class_id, ()):
                    if relation in own_relations:
                        continue
                    candidate = (depth, class_id)
                    if relation not in winners or candidate < winners[relation]:
                        winners[relation] = candidate
            next_frontier: set[str] = set()
            for class_id in frontier:
                for parent in parents.get(class_id, ()):
                    if parent not in seen:
                        seen.add(parent)
                        next_frontier.add(parent)
            frontier = sorted(next_frontier)
            depth += 1

        for relation, (_, class_id) in winners.items():
            for fact in declarations[class_id][relation]:
                results.update(_fact_instances(fact, instance, Origin.INHERITED))

    return sorted(results, key=_relation_sort_key)


def relation_edges(kb: KnowledgeBase) -> list[RelationInstance]:
    """All non-taxonomic relationship edges: declared facts plus inheritance."""
    declared: set[RelationInstance] = set()
    for fact in kb.facts:
        if isinstance(fact, (AttrSingle, AttrMulti, MetaSignature)) and fact.relation != PART_OF:
            declared.update(_fact_instances(fact, fact_subject(fact), Origin.DECLARED))
    combined = declared.union(resolve_inherited(kb))
    return sorted(combined, key=_relation_sort_key)
