/** Editable grid tables.
 *
 * Every cell shows the computed text from the render tree and carries a
 * data-node attribute so later /api/values payloads can patch it in place.
 * Editing swaps the cell for an input seeded with the raw text; committing
 * hands the raw string to the app. The input is only cleared on success, so
 * a failed round trip never loses what the user typed.
 */

import type { BlockObj } from "./api.js";

export function colLetters(col: number): string {
  let out = "";
  let n = col;
  while (n > 0) {
    const rem = (n - 1) % 26;
    out = String.fromCharCode(65 + rem) + out;
    n = Math.floor((n - 1) / 26);
  }
  return out;
}

export type CellCommitHandler = (grid: string, addr: string, raw: string) => Promise<boolean>;

export function buildGridTable(block: BlockObj, onCommit: CellCommitHandler): HTMLElement {
  const doc = document;
  const figure = doc.createElement("figure");
  figure.className = "grid-figure";
  figure.id = block.chunk_id;
  const table = doc.createElement("table");
  table.className = "grid";
  table.dataset.grid = block.name ?? block.chunk_id;

  const cells = block.cells ?? [];
  cells.forEach((row, rowIdx) => {
    const tr = doc.createElement("tr");
    row.forEach((cell, colIdx) => {
      const td = doc.createElement("td");
      const addr = `${colLetters(colIdx + 1)}${rowIdx + 1}`;
      td.dataset.addr = addr;
      td.dataset.raw = cell.raw;
      if (cell.formula || cell.text !== "") {
        td.dataset.node = `${table.dataset.grid}!${addr}`;
      }
      td.textContent = cell.text;
      if (cell.error) {
        td.classList.add("error");
      }
      if (cell.formula) {
        td.classList.add("formula-cell");
        td.title = cell.raw;
      }
      td.addEventListener("click", () => beginEdit(td, table.dataset.grid as string, addr, onCommit));
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });

  const caption = doc.createElement("figcaption");
  caption.textContent = block.name ?? block.chunk_id;
  figure.appendChild(table);
  figure.appendChild(caption);
  return figure;
}

function beginEdit(td: HTMLTableCellElement, grid: string, addr: string, onCommit: CellCommitHandler): void {
  if (td.querySelector("input")) {
    return; // already editing
  }
  const input = document.createElement("input");
  input.type = "text";
  input.value = td.dataset.raw ?? "";
  const previousText = td.textContent ?? "";
  td.textContent = "";
  td.appendChild(input);
  input.focus();

  let settled = false;

  const finish = (committed: boolean, newText?: string) => {
    if (settled) {
      return;
    }
    settled = true;
    input.remove();
    td.textContent = committed && newText !== undefined ? newText : previousText;
  };

  const commit = async () => {
    const raw = input.value;
    td.dataset.node = `${grid}!${addr}`;
    const ok = await onCommit(grid, addr, raw);
    if (ok) {
      td.dataset.raw = raw;
      // the committed value itself arrives through the values payload patch;
      // fall back to the raw text for cells the payload does not carry (empty)
      finish(true, td.textContent || raw);
    }
    // on failure the input stays put so nothing typed is lost
  };

  input.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    if (key === "Enter") {
      void commit();
    } else if (key === "Escape") {
      finish(false);
    }
  });
  input.addEventListener("blur", () => {
    if (!settled && input.value === (td.dataset.raw ?? "")) {
      finish(false); // nothing changed; do not spend a round trip
    }
  });
}
