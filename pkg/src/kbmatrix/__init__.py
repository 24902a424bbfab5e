"""Knowledge-base matrix browser.

Load frame-style KB text, unfold its taxonomy into strict trees, and explore
every relationship in an interactive two-axis matrix view.
"""

from .model import (
    AttrMulti,
    AttrSingle,
    Diagnostic,
    Entity,
    Fact,
    InstanceOf,
    KnowledgeBase,
    MetaSignature,
    Multiplicity,
    NodeRef,
    NumberLiteral,
    Origin,
    RelationInstance,
    Role,
    SubclassOf,
    TextLiteral,
    Value,
    relation_edges,
    resolve_inherited,
    structurally_equal,
    validate,
)
from .parser import ParseError, parse_kb, serialize_kb
from .hierarchy import (
    CyclicComponent,
    Forest,
    Occurrence,
    OccurrenceKind,
    TaxonomicEdge,
    TaxonomicKind,
    UnfoldOverflowError,
    find_roots,
    forest_to_dict,
    identity_pairs,
    taxonomic_edges,
    unfold_forest,
)
from .matrix import (
    Axis,
    AxisState,
    CellKind,
    CellMark,
    Direction,
    EngineError,
    MatrixView,
    NeighborhoodGraph,
    Visibility,
    collapse,
    collapse_pair,
    compute_cells,
    expand,
    neighborhood,
    new_view,
    with_expansion,
    node_tooltip,
    reveal,
    select,
    deselect,
)
from .service import (
    SessionStore,
    ValidationFailure,
    build_snapshot,
    encode_snapshot,
    load_kb,
    make_server,
)

__all__ = [
    "AttrMulti",
    "AttrSingle",
    "Axis",
    "AxisState",
    "CellKind",
    "CellMark",
    "CyclicComponent",
    "Diagnostic",
    "Direction",
    "EngineError",
    "Entity",
    "Fact",
    "Forest",
    "InstanceOf",
    "KnowledgeBase",
    "MatrixView",
    "MetaSignature",
    "Multiplicity",
    "NeighborhoodGraph",
    "NodeRef",
    "NumberLiteral",
    "Occurrence",
    "OccurrenceKind",
    "Origin",
    "ParseError",
    "RelationInstance",
    "Role",
    "SessionStore",
    "SubclassOf",
    "TaxonomicEdge",
    "TaxonomicKind",
    "TextLiteral",
    "UnfoldOverflowError",
    "ValidationFailure",
    "Value",
    "Visibility",
    "build_snapshot",
    "collapse",
    "collapse_pair",
    "compute_cells",
    "deselect",
    "encode_snapshot",
    "expand",
    "find_roots",
    "forest_to_dict",
    "identity_pairs",
    "load_kb",
    "make_server",
    "neighborhood",
    "new_view",
    "with_expansion",
    "node_tooltip",
    "parse_kb",
    "relation_edges",
    "resolve_inherited",
    "reveal",
    "select",
    "serialize_kb",
    "structurally_equal",
    "taxonomic_edges",
    "unfold_forest",
    "validate",
]
