/** View state: layout mode, selected theme, pane visibility, revision. */

export type Mode = "explicit-two-pane" | "literate-flow";

export interface Selection {
  chunkId: string;
  cell?: string;
}

export interface ViewState {
  mode: Mode;
  theme: string;
  docPaneOpen: boolean;
  revision: number;
  selection: Selection | null;
}

const STORAGE_KEY = "litgrid-ui";

export function initialState(): ViewState {
  return { mode: "literate-flow", theme: "all", docPaneOpen: true, revision: 0, selection: null };
}

/** Mode and theme survive reloads; revision and selection never do. */
export function loadPersisted(storage: Pick<Storage, "getItem"> | null): Partial<ViewState> {
  if (!storage) {
    return {};
  }
  try {
    const raw = storage.getItem(STORAGE_KEY);
    if (!raw) {
      return {};
    }
    const parsed = JSON.parse(raw) as { mode?: Mode; theme?: string };
    const out: Partial<ViewState> = {};
    if (parsed.mode === "explicit-two-pane" || parsed.mode === "literate-flow") {
      out.mode = parsed.mode;
    }
    if (typeof parsed.theme === "string" && parsed.theme) {
      out.theme = parsed.theme;
    }
    return out;
  } catch {
    return {};
  }
}

export function persist(storage: Pick<Storage, "setItem"> | null, state: ViewState): void {
  if (!storage) {
    return;
  }
  try {
    storage.setItem(STORAGE_KEY, JSON.stringify({ mode: state.mode, theme: state.theme }));
  } catch {
    // storage may be unavailable (private mode); persistence is best-effort
  }
}
