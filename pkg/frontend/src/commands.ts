// Interaction -> command translation. One user gesture maps to at most one
// command; callers send it and re-render from the response snapshot.

import type { Command, Snapshot } from "./types";

export function commandForCellClick(
  snapshot: Snapshot,
  rowIndex: number,
  colIndex: number
): Command | null {
  const row = snapshot.rows[rowIndex];
  const col = snapshot.cols[colIndex];
  if (!row || !col) return null;
  const cell = snapshot.cells.find((c) => c.row === rowIndex && c.col === colIndex);
  if (!cell) return null;

  switch (cell.visibility) {
    case "hiddenBelow":
      return { type: "reveal", row: row.occurrence, col: col.occurrence };
    case "revealedBelow":
      return { type: "collapsePair", row: row.occurrence, col: col.occurrence };
    case "direct":
      return { type: "select", node: row.node };
  }
}

export function commandForTreeToggle(
  snapshot: Snapshot,
  axis: "rows" | "cols",
  index: number
): Command | null {
  const entry = snapshot[axis][index];
  if (!entry || !entry.hasChildren) return null;
  return entry.expanded
    ? { type: "collapse", axis, occurrence: entry.occurrence }
    : { type: "expand", axis, occurrence: entry.occurrence };
}
