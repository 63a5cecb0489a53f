"""In-memory document model: chunks, ids, themes, edits, structural validation.

A Document is an immutable snapshot — every edit produces a new Document with
revision + 1, so snapshots can be shared freely across threads. Chunks are
frozen dataclasses; a Grid's cell map is copied, never mutated, by edits.

Chunk ids are lowercase tokens (`[a-z][a-z0-9_-]*`, max 64 chars) and must
not look like a cell address, which keeps the global reference namespace
unambiguous. Grid and Formula chunks use their name as their id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Union

from .config import Config, DEFAULT_CONFIG
from .errors import BadIndex, EditError, GridBoundsExceeded, IdCollision, UnknownChunk, UnknownTheme
from .values import EMPTY, _Empty

ID_RE = re.compile(r"[a-z][a-z0-9_-]{0,63}$")
CELL_SHAPED_RE = re.compile(r"[A-Za-z]{1,3}[0-9]+$")
_ADDR_RE = re.compile(r"([A-Za-z]{1,3})([0-9]+)$")
_NUMERIC_RE = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?$")

MAX_COL = 18278  # ZZZ


def is_valid_id(text: str) -> bool:
    return bool(ID_RE.fullmatch(text)) and not CELL_SHAPED_RE.fullmatch(text)


def col_to_letters(col: int) -> str:
    if not 1 <= col <= MAX_COL:
        raise ValueError(f"column {col} out of range 1..{MAX_COL}")
    letters = ""
    while col:
        col, rem = divmod(col - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


def letters_to_col(letters: str) -> int:
    col = 0
    for ch in letters.upper():
        col = col * 26 + (ord(ch) - ord("A") + 1)
    return col


@dataclass(frozen=True, order=True)
class CellAddr:
    """A 1-based cell position; field order (row, col) gives row-major sorting."""

    row: int
    col: int

    @classmethod
    def parse(cls, text: str) -> "CellAddr":
        m = _ADDR_RE.fullmatch(text)
        if not m:
            raise ValueError(f"bad cell address {text!r}")
        addr = cls(row=int(m.group(2)), col=letters_to_col(m.group(1)))
        if addr.row < 1:
            raise ValueError(f"bad cell address {text!r}: row must be >= 1")
        return addr

    @property
    def text(self) -> str:
        return f"{col_to_letters(self.col)}{self.row}"

    def __repr__(self) -> str:
        return f"CellAddr({self.text})"


@dataclass(frozen=True)
class FormulaCell:
    expr_text: str


@dataclass(frozen=True)
class CellContent:
    raw: str
    parsed: Union[float, str, bool, _Empty, FormulaCell]


def sniff_cell(raw: str, *, quoted: bool = False) -> CellContent:
    """Type a cell from its raw text.

    `=`-prefixed text is always a formula cell (quoting cannot suppress this;
    the raw/FormulaCell invariant leaves no representation for literal text
    starting with `=`). Quoting does suppress Number/Boolean sniffing, which
    is how CSV sources spell text like "123".
    """
    if raw == "":
        return CellContent("", EMPTY)
    if raw.startswith("="):
        return CellContent(raw, FormulaCell(raw[1:]))
    if not quoted:
        if raw in ("TRUE", "FALSE"):
            return CellContent(raw, raw == "TRUE")
        if _NUMERIC_RE.fullmatch(raw):
            number = float(raw)
            if number == number and abs(number) != float("inf"):
                return CellContent(raw, number)
    return CellContent(raw, raw)


@dataclass(frozen=True)
class Heading:
    id: str
    level: int
    title: str


@dataclass(frozen=True)
class Narrative:
    id: str
    body: str
    is_stub: bool = False


@dataclass(frozen=True)
class Grid:
    id: str
    cells: dict[CellAddr, CellContent] = field(default_factory=dict)
    n_rows: int = 0
    n_cols: int = 0

    @property
    def name(self) -> str:
        return self.id

    def cell(self, addr: CellAddr) -> CellContent:
        return self.cells.get(addr, CellContent("", EMPTY))

    def populated(self) -> list[CellAddr]:
        """Addresses with non-empty content, row-major order."""
        return sorted(a for a, c in self.cells.items() if c.parsed is not EMPTY)


@dataclass(frozen=True)
class Formula:
    id: str
    expr_text: str
    desc: str = ""

    @property
    def name(self) -> str:
        return self.id


@dataclass(frozen=True)
class Assertion:
    id: str
    expr_text: str
    msg: str = ""


@dataclass(frozen=True)
class Asset:
    id: str
    src: str
    caption: str = ""


@dataclass(frozen=True)
class ThemeDef:
    id: str
    members: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return self.id


Chunk = Union[Heading, Narrative, Grid, Formula, Assertion, Asset, ThemeDef]

KIND_NAMES: dict[type, str] = {
    Heading: "heading",
    Narrative: "narrative",
    Grid: "grid",
    Formula: "formula",
    Assertion: "assertion",
    Asset: "asset",
    ThemeDef: "theme",
}

# Kinds whose ids may be auto-assigned as `<kind>-<n>`; grids, formulas and
# themes are always named explicitly (the name is the id).
AUTO_ID_KINDS: dict[type, str] = {
    Heading: "heading",
    Narrative: "narrative",
    Assertion: "assertion",
    Asset: "asset",
}


def kind_name(chunk: Chunk) -> str:
    return KIND_NAMES[type(chunk)]


@dataclass(frozen=True)
class Document:
    meta: dict[str, str] = field(default_factory=lambda: {"title": "untitled"})
    chunks: tuple[Chunk, ...] = ()
    revision: int = 1

    @property
    def title(self) -> str:
        return self.meta.get("title", "untitled")

    def chunk(self, chunk_id: str) -> Chunk | None:
        for c in self.chunks:
            if c.id == chunk_id:
                return c
        return None

    def index_of(self, chunk_id: str) -> int:
        for i, c in enumerate(self.chunks):
            if c.id == chunk_id:
                return i
        return -1

    def ids(self) -> set[str]:
        return {c.id for c in self.chunks}

    def grids(self) -> list[Grid]:
        return [c for c in self.chunks if isinstance(c, Grid)]

    def formulas(self) -> list[Formula]:
        return [c for c in self.chunks if isinstance(c, Formula)]

    def assertions(self) -> list[Assertion]:
        return [c for c in self.chunks if isinstance(c, Assertion)]


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # ParseError | UnknownRef | CycleError | TypeError | AssertionFailure | DuplicateId | BadTheme | StubSuggestion
    severity: str  # error | warning | info
    message: str
    chunk_id: str | None = None
    cell: CellAddr | None = None
    cycle_path: tuple[str, ...] | None = None

    def location(self) -> str:
        if self.chunk_id is None:
            return ""
        if self.cell is None:
            return self.chunk_id
        return f"{self.chunk_id}!{self.cell.text}"


def validate_document(doc: Document, config: Config = DEFAULT_CONFIG) -> list[Diagnostic]:
    """Structural validation only; formulas are parsed but never evaluated.

    Returns every DuplicateId, BadTheme and cell-parse diagnostic. Cell parse
    problems are warnings (the document is still a sound snapshot; evaluation
    reports the same fault as an error-severity diagnostic with an
    Error(PARSE) value).
    """
    from .formula import parse_expr  # deferred: formula depends on this module
    from .errors import FormulaParseError

    out: list[Diagnostic] = []
    seen: set[str] = set()
    all_ids = doc.ids()

    for c in doc.chunks:
        if not ID_RE.fullmatch(c.id):
            out.append(Diagnostic("ParseError", "error", f"invalid chunk id {c.id!r}", chunk_id=c.id))
        elif CELL_SHAPED_RE.fullmatch(c.id):
            out.append(
                Diagnostic(
                    "ParseError", "error",
                    f"chunk id {c.id!r} matches the cell address pattern and would shadow references",
                    chunk_id=c.id,
                )
            )
        if c.id in seen:
            out.append(Diagnostic("DuplicateId", "error", f"duplicate chunk id {c.id!r}", chunk_id=c.id))
        seen.add(c.id)

        if isinstance(c, Heading) and not 1 <= c.level <= 4:
            out.append(Diagnostic("ParseError", "error", f"heading level {c.level} outside 1..4", chunk_id=c.id))
        elif isinstance(c, Narrative) and c.is_stub and not c.body.startswith("TODO:"):
            out.append(Diagnostic("ParseError", "error", "stub narrative body must start with 'TODO:'", chunk_id=c.id))
        elif isinstance(c, ThemeDef):
            if c.id == "all":
                out.append(Diagnostic("BadTheme", "error", "theme name 'all' is reserved", chunk_id=c.id))
            member_seen: set[str] = set()
            for member in c.members:
                if member not in all_ids:
                    out.append(
                        Diagnostic("BadTheme", "error", f"theme {c.id!r} references unknown chunk {member!r}", chunk_id=c.id)
                    )
                if member in member_seen:
                    out.append(
                        Diagnostic("BadTheme", "error", f"theme {c.id!r} lists {member!r} more than once", chunk_id=c.id)
                    )
                member_seen.add(member)
        elif isinstance(c, Grid):
            for addr in sorted(c.cells):
                content = c.cells[addr]
                if not (1 <= addr.row <= c.n_rows and 1 <= addr.col <= c.n_cols):
                    out.append(
                        Diagnostic(
                            "ParseError", "error",
                            f"cell {addr.text} outside grid bounds {c.n_rows}x{c.n_cols}",
                            chunk_id=c.id, cell=addr,
                        )
                    )
                if content.raw.startswith("=") != isinstance(content.parsed, FormulaCell):
                    out.append(
                        Diagnostic(
                            "ParseError", "error",
                            f"cell {addr.text}: raw text and parsed kind disagree about '=' prefix",
                            chunk_id=c.id, cell=addr,
                        )
                    )
                if isinstance(content.parsed, FormulaCell):
                    try:
                        parse_expr(content.parsed.expr_text, ctx=c.id)
                    except FormulaParseError as e:
                        out.append(
                            Diagnostic("ParseError", "warning", f"cell {addr.text}: {e.message}", chunk_id=c.id, cell=addr)
                        )
    return out


def theme_view(doc: Document, theme: str) -> list[str]:
    """Ordered chunk ids for a theme; `all` is document order minus ThemeDefs."""
    if theme == "all":
        return [c.id for c in doc.chunks if not isinstance(c, ThemeDef)]
    for c in doc.chunks:
        if isinstance(c, ThemeDef) and c.id == theme:
            return list(c.members)
    raise UnknownTheme(f"no theme named {theme!r}")


# --- edits ---------------------------------------------------------------


@dataclass(frozen=True)
class SetCell:
    grid: str
    addr: CellAddr
    raw: str


@dataclass(frozen=True)
class SetChunk:
    chunk_id: str
    chunk: Chunk


@dataclass(frozen=True)
class InsertChunk:
    index: int
    chunk: Chunk


@dataclass(frozen=True)
class DeleteChunk:
    chunk_id: str


@dataclass(frozen=True)
class MoveChunk:
    chunk_id: str
    index: int


@dataclass(frozen=True)
class SetTheme:
    name: str
    members: tuple[str, ...]


Edit = Union[SetCell, SetChunk, InsertChunk, DeleteChunk, MoveChunk, SetTheme]


def _set_cell(doc: Document, edit: SetCell, config: Config) -> tuple[Chunk, ...]:
    idx = doc.index_of(edit.grid)
    if idx < 0 or not isinstance(doc.chunks[idx], Grid):
        raise UnknownChunk(f"no grid named {edit.grid!r}")
    if "\n" in edit.raw or "\r" in edit.raw:
        raise EditError("cell text cannot contain line breaks")
    grid: Grid = doc.chunks[idx]
    addr = edit.addr
    if addr.row > config.max_rows or addr.col > config.max_cols:
        raise GridBoundsExceeded(
            f"cell {addr.text} exceeds the configured cap of {config.max_rows}x{config.max_cols}"
        )
    cells = dict(grid.cells)
    content = sniff_cell(edit.raw)
    if content.parsed is EMPTY:
        cells.pop(addr, None)
    else:
        cells[addr] = content
    new_grid = replace(
        grid,
        cells=cells,
        n_rows=max(grid.n_rows, addr.row),
        n_cols=max(grid.n_cols, addr.col),
    )
    return doc.chunks[:idx] + (new_grid,) + doc.chunks[idx + 1 :]


def apply_edit(doc: Document, edit: Edit, config: Config = DEFAULT_CONFIG) -> Document:
    """Apply one edit, returning a new snapshot with revision + 1.

    set_cell re-types the raw text; an unparsable `=`-formula is stored
    as-is (raw text is never discarded) and surfaces ParseError at
    evaluation. delete_chunk also removes the id from theme member lists so
    the edit ops alone cannot produce a structurally invalid snapshot.
    """
    if isinstance(edit, SetCell):
        chunks = _set_cell(doc, edit, config)
    elif isinstance(edit, SetChunk):
        idx = doc.index_of(edit.chunk_id)
        if idx < 0:
            raise UnknownChunk(f"no chunk named {edit.chunk_id!r}")
        if edit.chunk.id != edit.chunk_id:
            raise EditError("set_chunk cannot change a chunk's id; delete and re-insert instead")
        chunks = doc.chunks[:idx] + (edit.chunk,) + doc.chunks[idx + 1 :]
    elif isinstance(edit, InsertChunk):
        if not 0 <= edit.index <= len(doc.chunks):
            raise BadIndex(f"insert index {edit.index} outside 0..{len(doc.chunks)}")
        if edit.chunk.id in doc.ids():
            raise IdCollision(f"chunk id {edit.chunk.id!r} already exists")
        chunks = doc.chunks[: edit.index] + (edit.chunk,) + doc.chunks[edit.index :]
    elif isinstance(edit, DeleteChunk):
        idx = doc.index_of(edit.chunk_id)
        if idx < 0:
            raise UnknownChunk(f"no chunk named {edit.chunk_id!r}")
        remaining = doc.chunks[:idx] + doc.chunks[idx + 1 :]
        chunks = tuple(
            replace(c, members=tuple(m for m in c.members if m != edit.chunk_id))
            if isinstance(c, ThemeDef)
            else c
            for c in remaining
        )
    elif isinstance(edit, MoveChunk):
        idx = doc.index_of(edit.chunk_id)
        if idx < 0:
            raise UnknownChunk(f"no chunk named {edit.chunk_id!r}")
        if not 0 <= edit.index < len(doc.chunks):
            raise BadIndex(f"move index {edit.index} outside 0..{len(doc.chunks) - 1}")
        moved = doc.chunks[idx]
        rest = doc.chunks[:idx] + doc.chunks[idx + 1 :]
        chunks = rest[: edit.index] + (moved,) + rest[edit.index :]
    elif isinstance(edit, SetTheme):
        if edit.name == "all" or not is_valid_id(edit.name):
            raise EditError(f"invalid theme name {edit.name!r}")
        known = doc.ids()
        seen: set[str] = set()
        for member in edit.members:
            if member not in known:
                raise UnknownChunk(f"theme member {member!r} does not exist")
            if member in seen:
                raise EditError(f"theme member {member!r} listed more than once")
            seen.add(member)
        idx = doc.index_of(edit.name)
        if idx >= 0:
            existing = doc.chunks[idx]
            if not isinstance(existing, ThemeDef):
                raise EditError(f"chunk {edit.name!r} is not a theme")
            chunks = doc.chunks[:idx] + (replace(existing, members=tuple(edit.members)),) + doc.chunks[idx + 1 :]
        else:
            chunks = doc.chunks + (ThemeDef(id=edit.name, members=tuple(edit.members)),)
    else:
        raise EditError(f"unknown edit {edit!r}")
    return replace(doc, chunks=chunks, revision=doc.revision + 1)
