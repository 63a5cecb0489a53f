/** Application shell: wiring between the API client, view state, and DOM.
 *
 * The edit loop is exactly one POST /api/edits followed by one GET
 * /api/values per committed cell; the values payload patches every
 * dependent display in place. A 409 reloads the document and surfaces a
 * conflict notice without replaying anything. Values are never computed
 * locally and are only refetched after local edits (no polling).
 */

import { ApiClient, type EditObj, type TocEntryObj, type ViewPayload } from "./api.js";
import { initialState, loadPersisted, persist, type Mode, type ViewState } from "./state.js";
import { buildToc, buildView, updateValues, type ViewHandlers } from "./view.js";

export interface AppOptions {
  base?: string;
  root?: HTMLElement;
  storage?: Storage | null;
  fetchFn?: (input: string, init?: RequestInit) => Promise<Response>;
}

export class App {
  readonly client: ApiClient;
  readonly state: ViewState;
  readonly root: HTMLElement;
  private readonly storage: Storage | null;
  private view: ViewPayload | null = null;
  private tocEntries: TocEntryObj[] = [];
  private editInFlight = false;

  private header!: HTMLElement;
  private banner!: HTMLElement;
  private tocHost!: HTMLElement;
  private content!: HTMLElement;

  constructor(options: AppOptions = {}) {
    this.client = new ApiClient(options.base ?? "", options.fetchFn);
    this.storage = options.storage !== undefined ? options.storage : globalThis.localStorage ?? null;
    this.state = { ...initialState(), ...loadPersisted(this.storage) };
    this.root = options.root ?? (document.getElementById("app") as HTMLElement);
  }

  async start(): Promise<void> {
    this.buildShell();
    const doc = await this.client.getDoc();
    this.state.revision = doc.revision;
    await this.refreshView();
  }

  private buildShell(): void {
    this.root.textContent = "";

    this.header = el("header", "app-header");
    this.banner = el("div", "banner");
    this.banner.style.display = "none";
    this.tocHost = el("aside", "toc-host");
    this.content = el("main", "content");

    const layout = el("div", "layout");
    layout.appendChild(this.tocHost);
    layout.appendChild(this.content);

    this.root.appendChild(this.header);
    this.root.appendChild(this.banner);
    this.root.appendChild(layout);
  }

  private renderHeader(): void {
    this.header.textContent = "";
    const title = el("span", "title");
    title.textContent = this.view?.title ?? "";
    this.header.appendChild(title);

    const themeSelect = document.createElement("select");
    themeSelect.className = "theme-picker";
    for (const theme of this.availableThemes()) {
      const option = document.createElement("option");
      option.value = theme;
      option.textContent = theme;
      option.selected = theme === this.state.theme;
      themeSelect.appendChild(option);
    }
    themeSelect.addEventListener("change", () => {
      void this.setTheme(themeSelect.value);
    });
    this.header.appendChild(themeSelect);

    const modeButton = document.createElement("button");
    modeButton.type = "button";
    modeButton.className = "mode-toggle";
    modeButton.textContent = this.state.mode === "literate-flow" ? "two-pane view" : "literate view";
    modeButton.addEventListener("click", () => {
      this.setMode(this.state.mode === "literate-flow" ? "explicit-two-pane" : "literate-flow");
    });
    this.header.appendChild(modeButton);

    if (this.state.mode === "explicit-two-pane") {
      const paneButton = document.createElement("button");
      paneButton.type = "button";
      paneButton.className = "pane-toggle";
      paneButton.textContent = this.state.docPaneOpen ? "close doc pane" : "open doc pane";
      paneButton.addEventListener("click", () => {
        this.setDocPane(!this.state.docPaneOpen);
      });
      this.header.appendChild(paneButton);
    }

    const revision = el("span", "revision");
    revision.textContent = `rev ${this.state.revision}`;
    this.header.appendChild(revision);
  }

  private availableThemes(): string[] {
    const themes = ["all"];
    // theme names ride along on the toc of the current doc; cheapest source
    // is the doc payload, but we avoid holding the whole doc: the server
    // exposes theme chunks through /api/doc only, so collect lazily
    for (const name of this.themeNames) {
      if (!themes.includes(name)) {
        themes.push(name);
      }
    }
    return themes;
  }

  private themeNames: string[] = [];

  private handlers(): ViewHandlers {
    return {
      onCommitCell: (grid, addr, raw) => this.commitCellEdit(grid, addr, raw),
    };
  }

  private renderContent(): void {
    if (!this.view) {
      return;
    }
    this.tocHost.textContent = "";
    this.tocHost.appendChild(buildToc(this.tocEntries, (chunkId) => {
      this.state.selection = { chunkId };
    }));
    this.content.textContent = "";
    this.content.appendChild(buildView(this.view, this.handlers(), this.state.mode, this.state.docPaneOpen));
    this.renderHeader();
  }

  async refreshView(): Promise<void> {
    const doc = await this.client.getDoc();
    this.state.revision = doc.revision;
    this.themeNames = doc.chunks.filter((c) => c.kind === "theme").map((c) => c.id);
    const [view, tocEntries] = await Promise.all([
      this.client.getView(this.state.theme),
      this.client.getToc(this.state.theme),
    ]);
    this.view = view;
    this.tocEntries = tocEntries;
    this.renderContent();
  }

  /**
   * One edits+values round trip. Returns true when the edit applied and the
   * display was patched; false on conflict (document reloaded) or failure
   * (banner with retry, input preserved by the grid).
   */
  async commitCellEdit(grid: string, addr: string, raw: string): Promise<boolean> {
    if (this.editInFlight) {
      this.showBanner("An edit is already in flight; try again in a moment.", null);
      return false;
    }
    this.editInFlight = true;
    const edit: EditObj = { op: "set_cell", grid, addr, raw };
    try {
      const outcome = await this.client.postEdits(this.state.revision, [edit]);
      if (outcome.status === "conflict") {
        this.showBanner(`Document changed elsewhere (now at revision ${outcome.revision}); reloaded without your edit.`, null);
        await this.refreshView();
        return false;
      }
      this.state.revision = outcome.revision;
      const values = await this.client.getValues();
      updateValues(this.content, values);
      this.renderHeader();
      this.hideBannerSoon();
      return true;
    } catch (error) {
      this.showBanner(`Edit failed: ${describe(error)}`, () => {
        void this.commitCellEdit(grid, addr, raw);
      });
      return false;
    } finally {
      this.editInFlight = false;
    }
  }

  async setTheme(theme: string): Promise<void> {
    this.state.theme = theme;
    persist(this.storage, this.state);
    const [view, tocEntries] = await Promise.all([
      this.client.getView(theme),
      this.client.getToc(theme),
    ]);
    this.view = view;
    this.tocEntries = tocEntries;
    this.renderContent();
  }

  /** Layout only: no fetch, no value changes. */
  setMode(mode: Mode): void {
    this.state.mode = mode;
    persist(this.storage, this.state);
    this.renderContent();
  }

  setDocPane(open: boolean): void {
    this.state.docPaneOpen = open;
    this.renderContent();
  }

  showBanner(message: string, retry: (() => void) | null): void {
    this.banner.textContent = "";
    this.banner.style.display = "";
    const span = document.createElement("span");
    span.textContent = message;
    this.banner.appendChild(span);
    if (retry) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "retry";
      button.textContent = "retry";
      button.addEventListener("click", () => {
        this.banner.style.display = "none";
        retry();
      });
      this.banner.appendChild(button);
    }
  }

  private hideBannerSoon(): void {
    this.banner.style.display = "none";
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

export async function mount(options: AppOptions = {}): Promise<App> {
  const app = new App(options);
  await app.start();
  return app;
}
