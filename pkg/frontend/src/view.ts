/** DOM construction from server render trees.
 *
 * Two layouts over the same block list: literate-flow renders every block
 * in theme order; explicit-two-pane puts grids in a left pane and the
 * remaining chunks into tabbed sections on the right (one tab per top-level
 * heading). Switching layout never refetches or recomputes values.
 */

import type { BlockObj, RunObj, TocEntryObj, ValuesPayload, ViewPayload } from "./api.js";
import { formatValueObj } from "./api.js";
import { buildGridTable, type CellCommitHandler } from "./grid.js";

export interface ViewHandlers {
  onCommitCell: CellCommitHandler;
  onNavigate?: (chunkId: string) => void;
}

export function buildToc(entries: TocEntryObj[], onNavigate?: (chunkId: string) => void): HTMLElement {
  const nav = document.createElement("nav");
  nav.className = "toc";
  const title = document.createElement("strong");
  title.textContent = "Contents";
  nav.appendChild(title);
  nav.appendChild(entries.length ? tocList(entries, onNavigate) : emptyNote());
  return nav;
}

function emptyNote(): HTMLElement {
  const p = document.createElement("p");
  p.className = "toc-empty";
  p.textContent = "(no headings)";
  return p;
}

function tocList(entries: TocEntryObj[], onNavigate?: (chunkId: string) => void): HTMLElement {
  const ul = document.createElement("ul");
  for (const entry of entries) {
    const li = document.createElement("li");
    const a = document.createElement("a");
    a.href = `#${entry.chunk_id}`;
    a.textContent = entry.title;
    a.addEventListener("click", () => {
      const target = document.getElementById(entry.chunk_id);
      if (target && typeof (target as HTMLElement & { scrollIntoView?: () => void }).scrollIntoView === "function") {
        target.scrollIntoView();
      }
      onNavigate?.(entry.chunk_id);
    });
    li.appendChild(a);
    if (entry.children.length) {
      li.appendChild(tocList(entry.children, onNavigate));
    }
    ul.appendChild(li);
  }
  return ul;
}

function runNode(run: RunObj): Node {
  if (run.kind === "text") {
    return document.createTextNode(run.text ?? "");
  }
  if (run.kind === "link") {
    if (run.known) {
      const a = document.createElement("a");
      a.href = `#${run.target}`;
      a.textContent = run.target ?? "";
      return a;
    }
    const span = document.createElement("span");
    span.className = "dangling";
    span.textContent = `[[${run.target}]]`;
    return span;
  }
  const span = document.createElement("span");
  span.className = run.ok ? "splice" : "splice error";
  span.dataset.node = run.node_key ?? "";
  span.textContent = run.formatted ?? "";
  return span;
}

export function blockElement(block: BlockObj, handlers: ViewHandlers): HTMLElement {
  switch (block.kind) {
    case "heading": {
      const level = Math.min(Math.max(block.level ?? 1, 1), 4);
      const h = document.createElement(`h${level}`);
      h.id = block.chunk_id;
      h.textContent = block.title ?? "";
      return h;
    }
    case "paragraph": {
      const p = document.createElement("p");
      p.id = block.chunk_id;
      for (const run of block.runs ?? []) {
        p.appendChild(runNode(run));
      }
      return p;
    }
    case "table":
      return buildGridTable(block, handlers.onCommitCell);
    case "formula": {
      const div = document.createElement("div");
      div.className = "formula";
      div.id = block.chunk_id;
      const code = document.createElement("code");
      code.textContent = `${block.name} = ${block.expr}`;
      const value = document.createElement("span");
      value.className = block.error ? "value error" : "value";
      value.dataset.node = block.chunk_id;
      value.textContent = block.value ?? "";
      div.appendChild(code);
      div.appendChild(document.createTextNode(" → "));
      div.appendChild(value);
      if (block.desc) {
        const desc = document.createElement("span");
        desc.className = "desc";
        desc.textContent = block.desc;
        div.appendChild(desc);
      }
      return div;
    }
    case "assertion": {
      const div = document.createElement("div");
      div.id = block.chunk_id;
      div.dataset.assert = block.chunk_id;
      div.dataset.msg = block.msg ?? "";
      applyAssertionStatus(div, block.status ?? "error");
      const label = document.createElement("span");
      label.className = "badge";
      label.textContent = badgeLabel(block.status ?? "error");
      const code = document.createElement("code");
      code.textContent = block.expr ?? "";
      const msg = document.createElement("span");
      msg.className = "assert-msg";
      msg.textContent = block.status === "pass" ? "" : ` ${block.msg ?? ""}`;
      div.appendChild(label);
      div.appendChild(document.createTextNode(" "));
      div.appendChild(code);
      div.appendChild(msg);
      return div;
    }
    case "image": {
      const figure = document.createElement("figure");
      figure.id = block.chunk_id;
      const img = document.createElement("img");
      img.src = block.src ?? "";
      img.alt = block.caption ?? "";
      figure.appendChild(img);
      if (block.caption) {
        const cap = document.createElement("figcaption");
        cap.textContent = block.caption;
        figure.appendChild(cap);
      }
      return figure;
    }
    default: {
      const div = document.createElement("div");
      div.className = "stub";
      div.id = block.chunk_id;
      div.textContent = block.body ?? "";
      div.title = "Documentation stub — fill me in";
      return div;
    }
  }
}

function badgeLabel(status: string): string {
  return status === "pass" ? "PASS" : status === "fail" ? "FAIL" : "ERROR";
}

function applyAssertionStatus(el: HTMLElement, status: string): void {
  el.className = `assertion ${status}`;
}

export function buildLiterateFlow(view: ViewPayload, handlers: ViewHandlers): HTMLElement {
  const section = document.createElement("section");
  section.className = "literate-flow";
  for (const block of view.blocks) {
    section.appendChild(blockElement(block, handlers));
  }
  return section;
}

export function buildTwoPane(view: ViewPayload, handlers: ViewHandlers, docPaneOpen: boolean): HTMLElement {
  const wrap = document.createElement("section");
  wrap.className = "two-pane";

  const gridPane = document.createElement("div");
  gridPane.className = "grid-pane";
  for (const block of view.blocks) {
    if (block.kind === "table") {
      gridPane.appendChild(blockElement(block, handlers));
    }
  }

  const docPane = document.createElement("div");
  docPane.className = "doc-pane";
  if (!docPaneOpen) {
    docPane.classList.add("closed");
    (docPane as HTMLElement).style.display = "none";
  }

  // one tab per top-level heading; anything before the first heading lands
  // in a leading "Notes" tab
  const tabs: { title: string; blocks: BlockObj[] }[] = [];
  for (const block of view.blocks) {
    if (block.kind === "table") {
      continue;
    }
    if (block.kind === "heading" && (block.level ?? 1) === 1) {
      tabs.push({ title: block.title ?? block.chunk_id, blocks: [block] });
    } else {
      if (!tabs.length) {
        tabs.push({ title: "Notes", blocks: [] });
      }
      tabs[tabs.length - 1].blocks.push(block);
    }
  }

  const tabBar = document.createElement("div");
  tabBar.className = "tab-bar";
  const tabBodies: HTMLElement[] = [];
  tabs.forEach((tab, i) => {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = tab.title;
    button.className = i === 0 ? "tab active" : "tab";
    button.addEventListener("click", () => {
      tabBar.querySelectorAll("button").forEach((b) => b.classList.remove("active"));
      button.classList.add("active");
      tabBodies.forEach((body, j) => {
        body.style.display = j === i ? "" : "none";
      });
    });
    tabBar.appendChild(button);

    const body = document.createElement("div");
    body.className = "tab-body";
    body.style.display = i === 0 ? "" : "none";
    for (const block of tab.blocks) {
      body.appendChild(blockElement(block, handlers));
    }
    tabBodies.push(body);
  });
  docPane.appendChild(tabBar);
  tabBodies.forEach((b) => docPane.appendChild(b));

  wrap.appendChild(gridPane);
  wrap.appendChild(docPane);
  return wrap;
}

export function buildView(view: ViewPayload, handlers: ViewHandlers, mode: string, docPaneOpen: boolean): HTMLElement {
  return mode === "explicit-two-pane" ? buildTwoPane(view, handlers, docPaneOpen) : buildLiterateFlow(view, handlers);
}

/**
 * Patch every displayed value and assertion badge from a values payload.
 * This is the only way values ever change on screen.
 */
export function updateValues(root: ParentNode, payload: ValuesPayload): void {
  root.querySelectorAll<HTMLElement>("[data-node]").forEach((el) => {
    const key = el.dataset.node;
    if (!key) {
      return;
    }
    const value = payload.values[key];
    if (value === undefined) {
      return;
    }
    el.textContent = formatValueObj(value);
    el.classList.toggle("error", value.t === "e");
  });
  root.querySelectorAll<HTMLElement>("[data-assert]").forEach((el) => {
    const key = el.dataset.assert;
    if (!key) {
      return;
    }
    const value = payload.values[key];
    const status = value === undefined ? "error" : value.t === "b" ? (value.v ? "pass" : "fail") : "error";
    applyAssertionStatus(el, status);
    const badge = el.querySelector(".badge");
    if (badge) {
      badge.textContent = badgeLabel(status);
    }
    const msg = el.querySelector(".assert-msg");
    if (msg) {
      msg.textContent = status === "pass" ? "" : ` ${el.dataset.msg ?? ""}`;
    }
  });
}
