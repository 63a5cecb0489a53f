/**
 * End-to-end: the real Python server, the real HTTP contract, a scripted
 * DOM session. Covers the live-edit loop, doc-pane closure, and theme
 * switching against actual computed values.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { App } from "../src/main.js";
import { appRoot, waitFor, type RequestLogEntry } from "./helpers.js";

const DOC = `@title: E2E model
# Overview

The running total is {{total}}.

::: grid name=data rows=2 cols=2
1,2
3,4
:::

::: formula name=total
total = SUM(data!A1:B2)
:::

::: assert msg="total stays under 100"
total < 100
:::

::: theme name=mini
data
total
:::
`;

let proc: ChildProcess | null = null;
let base = "";

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "litgrid-e2e-"));
  const docPath = join(dir, "model.lsheet");
  writeFileSync(docPath, DOC, "utf-8");

  proc = spawn("python3", ["-m", "litgrid", "serve", docPath, "--port", "0"], {
    cwd: join(__dirname, "..", ".."),
    stdio: ["ignore", "pipe", "pipe"],
  });
  base = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 15000);
    let buffer = "";
    proc!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/on (http:\/\/[^/\s]+)\//);
      if (m) {
        clearTimeout(timer);
        resolve(m[1]);
      }
    });
    proc!.on("exit", (code) => reject(new Error(`server exited early with ${code}`)));
  });
}, 20000);

afterAll(() => {
  proc?.kill();
});

function loggedFetch(log: RequestLogEntry[]) {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input);
    log.push({ method: init?.method ?? "GET", path: url.pathname + url.search });
    return fetch(input, init);
  };
}

describe("live loop against the real server", () => {
  it("runs the full edit/observe/switch session", async () => {
    const log: RequestLogEntry[] = [];
    const app = new App({ base, root: appRoot(), storage: null, fetchFn: loggedFetch(log) });
    await app.start();

    // initial render: real computed values
    expect(app.root.querySelector('[data-node="total"]')?.textContent).toBe("10");
    const badge = app.root.querySelector('[data-assert="assertion-1"]') as HTMLElement;
    expect(badge.className).toContain("pass");

    // edit a cell feeding SUM through the DOM; exactly one edits+values trip
    const before = log.length;
    const td = app.root.querySelector('td[data-addr="B2"]') as HTMLTableCellElement;
    td.click();
    const input = td.querySelector("input") as HTMLInputElement;
    expect(input.value).toBe("4");
    input.value = "94";
    input.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter", bubbles: true }));

    await waitFor(() => app.root.querySelector('[data-node="total"]')?.textContent === "100");
    const during = log.slice(before);
    expect(during.filter((e) => e.method === "POST" && e.path === "/api/edits")).toHaveLength(1);
    expect(during.filter((e) => e.method === "GET" && e.path === "/api/values")).toHaveLength(1);
    expect(during).toHaveLength(2);

    // the assertion badge flipped in the same round trip (100 < 100 is false)
    expect(badge.className).toContain("fail");
    expect(app.state.revision).toBe(2);

    // two-pane mode: close the doc pane, the grid stays editable
    app.setMode("explicit-two-pane");
    app.setDocPane(false);
    const docPane = app.root.querySelector(".doc-pane") as HTMLElement;
    expect(docPane.classList.contains("closed")).toBe(true);
    const cell = app.root.querySelector('td[data-addr="A1"]') as HTMLTableCellElement;
    cell.click();
    const cellInput = cell.querySelector("input") as HTMLInputElement;
    expect(cellInput).toBeTruthy();
    cellInput.value = "11";
    cellInput.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter", bubbles: true }));
    await waitFor(() => app.root.querySelector('[data-node="total"]')?.textContent === "110");
    expect(app.state.revision).toBe(3);

    // theme switch reorders blocks; displayed values stay identical
    const valuesBefore = new Map(
      Array.from(app.root.querySelectorAll("[data-node]")).map((el) => [el.getAttribute("data-node"), el.textContent]),
    );
    await app.setTheme("mini");
    const orderedIds = Array.from(app.root.querySelectorAll("main section [id]")).map((e) => e.id);
    expect(orderedIds[0]).toBe("data");
    expect(orderedIds).toContain("total");
    expect(orderedIds).not.toContain("heading-1");
    for (const el of Array.from(app.root.querySelectorAll("[data-node]"))) {
      const key = el.getAttribute("data-node");
      if (key && valuesBefore.has(key)) {
        expect(el.textContent, `value for ${key} changed on theme switch`).toBe(valuesBefore.get(key));
      }
    }

    // a stale edit conflicts cleanly (second client simulated with raw fetch)
    const stale = await fetch(`${base}/api/edits`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ base_revision: 1, edits: [{ op: "set_cell", grid: "data", addr: "A1", raw: "0" }] }),
    });
    expect(stale.status).toBe(409);
  }, 20000);
});
