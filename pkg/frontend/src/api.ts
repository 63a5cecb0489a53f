/**
 * Typed client for the litgrid document server.
 *
 * The server is the single source of truth for every computed value; this
 * client never evaluates anything, it only ferries JSON.
 */

export interface ValueObj {
  t: "n" | "s" | "b" | "e" | "empty";
  v?: number | string | boolean;
}

export interface DiagnosticObj {
  kind: string;
  severity: string;
  message: string;
  chunk?: string;
  cell?: string;
  cycle_path?: string[];
}

export interface ValuesPayload {
  values: Record<string, ValueObj>;
  diagnostics: DiagnosticObj[];
}

export interface CellEntry {
  raw: string;
  q?: boolean;
}

export interface ChunkObj {
  id: string;
  kind: "heading" | "narrative" | "grid" | "formula" | "assertion" | "asset" | "theme";
  level?: number;
  title?: string;
  body?: string;
  stub?: boolean;
  name?: string;
  rows?: number;
  cols?: number;
  cells?: Record<string, CellEntry>;
  expr?: string;
  desc?: string;
  msg?: string;
  src?: string;
  caption?: string;
  members?: string[];
}

export interface DocPayload {
  revision: number;
  meta: Record<string, string>;
  chunks: ChunkObj[];
}

export interface RunObj {
  kind: "text" | "link" | "splice";
  text?: string;
  target?: string;
  known?: boolean;
  node_key?: string;
  formatted?: string;
  ok?: boolean;
}

export interface TableCellObj {
  text: string;
  raw: string;
  formula: boolean;
  error: boolean;
}

export interface BlockObj {
  kind: "heading" | "paragraph" | "table" | "formula" | "assertion" | "image" | "stub";
  chunk_id: string;
  level?: number;
  title?: string;
  runs?: RunObj[];
  name?: string;
  rows?: number;
  cols?: number;
  cells?: TableCellObj[][];
  expr?: string;
  value?: string;
  error?: boolean;
  desc?: string;
  status?: "pass" | "fail" | "error";
  msg?: string;
  src?: string;
  caption?: string;
  body?: string;
}

export interface ViewPayload {
  theme: string;
  title: string;
  blocks: BlockObj[];
  diagnostics: DiagnosticObj[];
  revision: number;
}

export interface TocEntryObj {
  chunk_id: string;
  level: number;
  title: string;
  children: TocEntryObj[];
}

export interface SuggestionObj {
  doc_path: string;
  chunk_id: string;
  score: number;
}

export type EditObj =
  | { op: "set_cell"; grid: string; addr: string; raw: string }
  | { op: "delete_chunk"; id: string }
  | { op: "move_chunk"; id: string; index: number }
  | { op: "set_theme"; name: string; members: string[] };

export type EditOutcome =
  | { status: "applied"; revision: number }
  | { status: "conflict"; revision: number };

export class ApiError extends Error {
  constructor(message: string, readonly httpStatus: number) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(private readonly base: string = "", fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.base + path);
    if (!resp.ok) {
      throw new ApiError(await describeError(resp), resp.status);
    }
    return (await resp.json()) as T;
  }

  getDoc(): Promise<DocPayload> {
    return this.getJson("/api/doc");
  }

  getValues(): Promise<ValuesPayload> {
    return this.getJson("/api/values");
  }

  getView(theme: string): Promise<ViewPayload> {
    return this.getJson(`/api/view?theme=${encodeURIComponent(theme)}`);
  }

  async getToc(theme: string): Promise<TocEntryObj[]> {
    const payload = await this.getJson<{ toc: TocEntryObj[] }>(`/api/toc?theme=${encodeURIComponent(theme)}`);
    return payload.toc;
  }

  async getSuggest(q: string, k = 5): Promise<SuggestionObj[]> {
    const payload = await this.getJson<{ suggestions: SuggestionObj[] }>(
      `/api/suggest?q=${encodeURIComponent(q)}&k=${k}`,
    );
    return payload.suggestions;
  }

  /** Optimistic-concurrency edit batch: 200 applies, 409 reports a conflict. */
  async postEdits(baseRevision: number, edits: EditObj[]): Promise<EditOutcome> {
    const resp = await this.fetchFn(this.base + "/api/edits", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ base_revision: baseRevision, edits }),
    });
    if (resp.status === 200) {
      const body = (await resp.json()) as { revision: number };
      return { status: "applied", revision: body.revision };
    }
    if (resp.status === 409) {
      const body = (await resp.json()) as { revision: number };
      return { status: "conflict", revision: body.revision };
    }
    throw new ApiError(await describeError(resp), resp.status);
  }

  async postStubs(apply: boolean): Promise<{ pending?: string[]; inserted?: { target: string }[]; revision?: number }> {
    const resp = await this.fetchFn(this.base + `/api/stubs?apply=${apply}`, { method: "POST" });
    if (!resp.ok) {
      throw new ApiError(await describeError(resp), resp.status);
    }
    return (await resp.json()) as { pending?: string[]; inserted?: { target: string }[]; revision?: number };
  }
}

async function describeError(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { error?: string };
    if (body && typeof body.error === "string") {
      return body.error;
    }
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}

/** Render a typed value exactly as the server's values payload describes it. */
export function formatValueObj(v: ValueObj): string {
  switch (v.t) {
    case "n":
      return String(v.v);
    case "s":
      return String(v.v);
    case "b":
      return v.v ? "TRUE" : "FALSE";
    case "e":
      return `#${v.v}!`;
    default:
      return "";
  }
}
