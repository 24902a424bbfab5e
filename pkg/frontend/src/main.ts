import { SessionClient } from "./client";
import { commandForCellClick, commandForTreeToggle } from "./commands";
import { isWellFormed, render } from "./render";
import type { Snapshot, UiState } from "./types";
import "./styles.css";

const app = document.getElementById("app")!;
const banner = document.getElementById("banner")!;

function showBanner(message: string): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
}

function clearBanner(): void {
  banner.textContent = "";
  banner.classList.add("hidden");
}

async function boot(): Promise<void> {
  const kbResponse = await fetch("/default-kb");
  if (!kbResponse.ok) {
    showBanner("no default knowledge base on this server");
    return;
  }
  const kbText = await kbResponse.text();
  const { client, snapshot } = await SessionClient.create("", kbText);

  const state: UiState = {
    sessionId: client.sessionId,
    lastSnapshot: snapshot,
    pendingCommand: false,
  };

  function apply(next: Snapshot): void {
    // responses resolve in submission order; skip anything stale anyway
    if (next.revision < state.lastSnapshot.revision) return;
    if (!isWellFormed(next)) {
      showBanner("malformed snapshot from server");
      return;
    }
    state.lastSnapshot = next;
    app.innerHTML = render(next);
  }

  async function dispatch(command: ReturnType<typeof commandForCellClick>): Promise<void> {
    if (!command) return;
    state.pendingCommand = true;
    try {
      apply(await client.send(command));
      clearBanner();
    } catch (err) {
      showBanner(err instanceof Error ? err.message : String(err));
    } finally {
      state.pendingCommand = client.pending;
    }
  }

  app.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const toggle = target.closest<HTMLElement>(".toggle");
    if (toggle) {
      const axis = toggle.dataset.axis as "rows" | "cols";
      const index = Number(toggle.dataset.index);
      void dispatch(commandForTreeToggle(state.lastSnapshot, axis, index));
      return;
    }
    const cell = target.closest<HTMLElement>("td.cell[data-row]");
    if (cell) {
      void dispatch(
        commandForCellClick(state.lastSnapshot, Number(cell.dataset.row), Number(cell.dataset.col))
      );
    }
  });

  app.addEventListener("mouseover", (event) => {
    const cell = (event.target as HTMLElement).closest<HTMLElement>("td.cell[data-row]");
    state.hoveredCell = cell
      ? { row: Number(cell.dataset.row), col: Number(cell.dataset.col) }
      : undefined;
  });

  apply(snapshot);
}

boot().catch((err) => showBanner(err instanceof Error ? err.message : String(err)));
