// Pure snapshot -> HTML string rendering. No DOM access here so tests can
// run in plain node; main.ts owns mounting and event wiring.

import type { AxisEntry, Selection, Snapshot, SnapshotCell } from "./types";

const GLYPH_HIDDEN = "⊞"; // boxed plus
const GLYPH_REVEALED = "⊟"; // boxed minus
const GLYPH_FILLED = "■";
const GLYPH_OUTLINED = "□";
const TOGGLE_COLLAPSED = "▸";
const TOGGLE_EXPANDED = "▾";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Guard against half-formed server responses before touching fields. */
export function isWellFormed(snapshot: unknown): snapshot is Snapshot {
  if (typeof snapshot !== "object" || snapshot === null) return false;
  const s = snapshot as Snapshot;
  if (typeof s.revision !== "number") return false;
  if (!Array.isArray(s.rows) || !Array.isArray(s.cols) || !Array.isArray(s.cells)) {
    return false;
  }
  return s.cells.every(
    (c) =>
      Number.isInteger(c.row) &&
      Number.isInteger(c.col) &&
      c.row >= 0 &&
      c.row < s.rows.length &&
      c.col >= 0 &&
      c.col < s.cols.length &&
      Array.isArray(c.relations)
  );
}

function arrowFor(cell: SnapshotCell): string {
  const directions = new Set(cell.relations.map((r) => r.direction));
  if (directions.has("rowToCol") && directions.has("colToRow")) return "⇄";
  if (directions.has("colToRow")) return "←";
  if (directions.has("rowToCol")) return "→";
  return "";
}

function cellGlyph(cell: SnapshotCell): string {
  switch (cell.visibility) {
    case "hiddenBelow":
      return GLYPH_HIDDEN;
    case "revealedBelow":
      return GLYPH_REVEALED;
    case "direct":
      // only declared edges get the direction arrow; derived ones stay a
      // plain outlined square
      return cell.kind === "explicit" ? GLYPH_FILLED + arrowFor(cell) : GLYPH_OUTLINED;
  }
}

function toggleHtml(axis: "rows" | "cols", index: number, entry: AxisEntry): string {
  if (!entry.hasChildren) return "";
  const glyph = entry.expanded ? TOGGLE_EXPANDED : TOGGLE_COLLAPSED;
  return (
    `<span class="toggle" data-axis="${axis}" data-index="${index}">` +
    `${glyph}</span>`
  );
}

function headerHtml(axis: "rows" | "cols", index: number, entry: AxisEntry): string {
  const cls = axis === "rows" ? "row-header" : "col-header";
  return (
    `<th class="${cls} depth-${entry.depth}"` +
    ` data-occurrence="${escapeHtml(entry.occurrence)}"` +
    ` title="${escapeHtml(entry.tooltip)}">` +
    toggleHtml(axis, index, entry) +
    `<span class="label">${escapeHtml(entry.node)}</span></th>`
  );
}

function neighborhoodSvg(selected: Selection): string {
  const size = 170;
  const cx = size / 2;
  const cy = size / 2;
  const radius = 62;
  const parts: string[] = [
    `<svg class="neighborhood" viewBox="0 0 ${size} ${size}" width="${size}" height="${size}">`,
    `<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4"` +
      ` markerWidth="6" markerHeight="6" orient="auto-start-reverse">` +
      `<path d="M0,0 L8,4 L0,8 z"/></marker></defs>`,
  ];
  const n = selected.neighbors.length;
  selected.neighbors.forEach((neighbor, i) => {
    const angle = (2 * Math.PI * i) / Math.max(n, 1) - Math.PI / 2;
    const nx = cx + radius * Math.cos(angle);
    const ny = cy + radius * Math.sin(angle);
    // arrowhead points at the target end of the relationship
    const [x1, y1, x2, y2] =
      neighbor.direction === "out" ? [cx, cy, nx, ny] : [nx, ny, cx, cy];
    parts.push(
      `<line x1="${x1.toFixed(1)}" y1="${y1.toFixed(1)}"` +
        ` x2="${x2.toFixed(1)}" y2="${y2.toFixed(1)}" marker-end="url(#arrow)"/>`
    );
    parts.push(
      `<text class="edge-label" x="${((x1 + x2) / 2).toFixed(1)}"` +
        ` y="${((y1 + y2) / 2).toFixed(1)}">${escapeHtml(neighbor.relation)}</text>`
    );
    parts.push(
      `<text class="neighbor" x="${nx.toFixed(1)}" y="${ny.toFixed(1)}">` +
        `${escapeHtml(neighbor.other)}</text>`
    );
  });
  parts.push(`<text class="center" x="${cx}" y="${cy}">${escapeHtml(selected.node)}</text>`);
  parts.push("</svg>");
  return parts.join("");
}

export function render(snapshot: Snapshot): string {
  if (!isWellFormed(snapshot)) {
    return `<div class="banner error">malformed snapshot</div>`;
  }

  const byPosition = new Map<string, SnapshotCell>();
  for (const cell of snapshot.cells) {
    byPosition.set(`${cell.row},${cell.col}`, cell);
  }

  const corner = snapshot.selected ? neighborhoodSvg(snapshot.selected) : "";
  const head =
    `<tr><th class="corner">${corner}</th>` +
    snapshot.cols.map((entry, i) => headerHtml("cols", i, entry)).join("") +
    "</tr>";

  const body = snapshot.rows
    .map((entry, r) => {
      const cells = snapshot.cols
        .map((_, c) => {
          const cell = byPosition.get(`${r},${c}`);
          if (!cell) return `<td class="cell empty"></td>`;
          return (
            `<td class="cell vis-${cell.visibility} kind-${cell.kind}"` +
            ` data-row="${r}" data-col="${c}"` +
            ` title="${escapeHtml(cell.tooltip)}">${cellGlyph(cell)}</td>`
          );
        })
        .join("");
      return `<tr>${headerHtml("rows", r, entry)}${cells}</tr>`;
    })
    .join("");

  return (
    `<table class="matrix"><thead>${head}</thead>` +
    `<tbody>${body}</tbody></table>`
  );
}
