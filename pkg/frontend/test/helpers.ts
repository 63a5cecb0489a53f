/** Shared test scaffolding: a canned in-memory server behind a fetch shim. */

import type { ViewPayload, ValuesPayload, DocPayload, TocEntryObj } from "../src/api.js";

export interface RequestLogEntry {
  method: string;
  path: string;
}

export interface MockServer {
  fetchFn: (input: string, init?: RequestInit) => Promise<Response>;
  log: RequestLogEntry[];
  state: { revision: number };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/**
 * Two-revision fixture: grid `data` (A1=1, B1=2), `total = SUM(data!A1:B1)`,
 * assertion `total <= 10`. Values for revision 2 are what the engine would
 * produce after setting B1 to 20 (total 21, assertion fails); the mock holds
 * them canned so the UI provably does no computing of its own.
 */
export function makeMockServer(): MockServer {
  const state = { revision: 1 };
  const log: RequestLogEntry[] = [];

  const doc: DocPayload = {
    revision: 1,
    meta: { title: "Mock doc" },
    chunks: [
      { id: "heading-1", kind: "heading", level: 1, title: "Mock doc" },
      { id: "narrative-1", kind: "narrative", body: "Total is {{total}}.", stub: false },
      { id: "data", kind: "grid", name: "data", rows: 1, cols: 2, cells: { A1: { raw: "1" }, B1: { raw: "2" } } },
      { id: "total", kind: "formula", name: "total", expr: "SUM(data!A1:B1)", desc: "" },
      { id: "assertion-1", kind: "assertion", expr: "total <= 10", msg: "total stays small" },
      { id: "mini", kind: "theme", name: "mini", members: ["data"] },
    ],
  };

  const valuesByRevision: Record<number, ValuesPayload> = {
    1: {
      values: {
        "data!A1": { t: "n", v: 1 },
        "data!B1": { t: "n", v: 2 },
        total: { t: "n", v: 3 },
        "assertion-1": { t: "b", v: true },
      },
      diagnostics: [],
    },
    2: {
      values: {
        "data!A1": { t: "n", v: 1 },
        "data!B1": { t: "n", v: 20 },
        total: { t: "n", v: 21 },
        "assertion-1": { t: "b", v: false },
      },
      diagnostics: [
        { kind: "AssertionFailure", severity: "error", message: "total stays small", chunk: "assertion-1" },
      ],
    },
  };

  function viewFor(theme: string, revision: number): ViewPayload {
    const v = valuesByRevision[revision].values;
    const blocks: ViewPayload["blocks"] = [
      { kind: "heading", chunk_id: "heading-1", level: 1, title: "Mock doc" },
      {
        kind: "paragraph",
        chunk_id: "narrative-1",
        runs: [
          { kind: "text", text: "Total is " },
          { kind: "splice", node_key: "total", formatted: String(v["total"].v), ok: true },
          { kind: "text", text: "." },
        ],
      },
      {
        kind: "table",
        chunk_id: "data",
        name: "data",
        rows: 1,
        cols: 2,
        cells: [
          [
            { text: String(v["data!A1"].v), raw: String(v["data!A1"].v), formula: false, error: false },
            { text: String(v["data!B1"].v), raw: String(v["data!B1"].v), formula: false, error: false },
          ],
        ],
      },
      {
        kind: "formula",
        chunk_id: "total",
        name: "total",
        expr: "SUM(data!A1:B1)",
        value: String(v["total"].v),
        error: false,
        desc: "",
      },
      {
        kind: "assertion",
        chunk_id: "assertion-1",
        status: v["assertion-1"].v ? "pass" : "fail",
        msg: "total stays small",
        expr: "total <= 10",
      },
    ];
    const chosen = theme === "mini" ? blocks.filter((b) => b.chunk_id === "data") : blocks;
    return { theme, title: "Mock doc", blocks: chosen, diagnostics: [], revision };
  }

  const tocAll: TocEntryObj[] = [{ chunk_id: "heading-1", level: 1, title: "Mock doc", children: [] }];

  const fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const url = new URL(input, "http://mock");
    log.push({ method, path: url.pathname + url.search });

    if (url.pathname === "/api/doc") {
      return jsonResponse(200, { ...doc, revision: state.revision });
    }
    if (url.pathname === "/api/values") {
      return jsonResponse(200, valuesByRevision[state.revision]);
    }
    if (url.pathname === "/api/view") {
      const theme = url.searchParams.get("theme") ?? "all";
      if (theme !== "all" && theme !== "mini") {
        return jsonResponse(404, { error: `no theme named '${theme}'` });
      }
      return jsonResponse(200, viewFor(theme, state.revision));
    }
    if (url.pathname === "/api/toc") {
      const theme = url.searchParams.get("theme") ?? "all";
      return jsonResponse(200, { toc: theme === "mini" ? [] : tocAll });
    }
    if (url.pathname === "/api/edits" && method === "POST") {
      const body = JSON.parse(String(init?.body)) as { base_revision: number };
      if (body.base_revision !== state.revision) {
        return jsonResponse(409, { revision: state.revision });
      }
      state.revision += 1;
      return jsonResponse(200, { revision: state.revision });
    }
    return jsonResponse(404, { error: `no such endpoint ${url.pathname}` });
  };

  return { fetchFn, log, state };
}

export async function waitFor(predicate: () => boolean, timeoutMs = 5000): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) {
      throw new Error("condition never became true");
    }
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
}

export function appRoot(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById("app") as HTMLElement;
}
