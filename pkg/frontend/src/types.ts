// Wire types for the session service. Shapes mirror the snapshot documents
// the server emits; field names must not drift from the HTTP contract.

export type CellKind = "explicit" | "implicit";
export type CellVisibility = "direct" | "hiddenBelow" | "revealedBelow";
export type RelationDirection = "rowToCol" | "colToRow";
export type NeighborDirection = "out" | "in";

export interface AxisEntry {
  occurrence: string;
  node: string;
  depth: number;
  expanded: boolean;
  hasChildren: boolean;
  tooltip: string;
}

export interface CellRelation {
  name: string;
  direction: RelationDirection;
}

export interface SnapshotCell {
  row: number;
  col: number;
  kind: CellKind;
  visibility: CellVisibility;
  relations: CellRelation[];
  tooltip: string;
}

export interface Neighbor {
  relation: string;
  other: string;
  direction: NeighborDirection;
}

export interface Selection {
  node: string;
  neighbors: Neighbor[];
}

export interface Snapshot {
  revision: number;
  rows: AxisEntry[];
  cols: AxisEntry[];
  cells: SnapshotCell[];
  selected: Selection | null;
}

export type Command =
  | { type: "expand"; axis: "rows" | "cols"; occurrence: string }
  | { type: "collapse"; axis: "rows" | "cols"; occurrence: string }
  | { type: "reveal"; row: string; col: string }
  | { type: "collapsePair"; row: string; col: string }
  | { type: "select"; node: string }
  | { type: "deselect" };

export interface WireError {
  error: { code: string; message: string };
}

export interface UiState {
  sessionId: string;
  lastSnapshot: Snapshot;
  pendingCommand: boolean;
  hoveredCell?: { row: number; col: number };
}
