"""Bit-exact persistence: the .lsheet text format, CSV grid import, and the
canonical JSON encodings shared by the CLI and the HTTP service.

.lsheet grammar, line-oriented, UTF-8, LF (CR/CRLF normalized on read):

  @key: value                      leading metadata lines (`@lsheet: 1` is an
                                   optional version marker, never stored)
  # .. ####  + space               headings, optional trailing `{#id}` marker
  ::: <kind> key=value ...         fenced blocks, closed by a line that is
                                   exactly `:::`; kinds: formula, grid,
                                   assert, asset, theme, narrative
  anything else                    maximal runs of non-blank lines form one
                                   narrative chunk; blank lines separate them

Escapes: a top-level line starting `\\#`, `\\:::` or `\\@` is literal text.
Inside a fenced narrative body a leading `\\` is stripped (written by the
serializer for lines starting `:::` or `\\`).

Auto ids are `<kind>-<n>`, n counting only auto-id chunks of that kind in
document order; the serializer emits an explicit id only where re-parsing
would not reproduce the stored id, which makes parse∘serialize an identity.

Formula and assertion expression text is canonicalized at parse time when it
parses; broken expressions are kept verbatim and surface diagnostics.
Document.revision is runtime state and is not persisted.
"""

from __future__ import annotations

import json
import re

from .engine import EvalResult
from .errors import CsvImportError, FormulaParseError, LsheetFatalError
from .formula import format_expr, parse_expr
from .model import (
    AUTO_ID_KINDS,
    Assertion,
    Asset,
    CellAddr,
    CellContent,
    Chunk,
    DeleteChunk,
    Diagnostic,
    Document,
    Edit,
    Formula,
    FormulaCell,
    Grid,
    Heading,
    InsertChunk,
    MoveChunk,
    Narrative,
    SetCell,
    SetChunk,
    SetTheme,
    ThemeDef,
    is_valid_id,
    kind_name,
    sniff_cell,
)
from .values import EMPTY, ErrorValue, Value, clamp_number

_META_RE = re.compile(r"@([A-Za-z][A-Za-z0-9_-]*):\s?(.*)$")
_HEADING_RE = re.compile(r"(#{1,4}) (.*)$")
_ID_MARKER_RE = re.compile(r"(.*?)\s\{#([a-z][a-z0-9_-]*)\}$")
_FORMULA_LINE_RE = re.compile(r"([a-z][a-z0-9_-]*)\s*=\s*(\S.*)$")
_BARE_ATTR_RE = re.compile(r"[A-Za-z0-9_./~-]+$")
_FENCE_KINDS = ("formula", "grid", "assert", "asset", "theme", "narrative")


# --- CSV records ------------------------------------------------------------


def _parse_csv_record(line: str) -> list[tuple[str, bool]]:
    """One line -> [(field text, was quoted)]; empty line -> no fields.

    Comma separated, double-quote quoting, doubled-quote escape. Raises
    ValueError with a 1-based column position on structural problems.
    """
    if line == "":
        return []
    fields: list[tuple[str, bool]] = []
    pos = 0
    n = len(line)
    while True:
        if pos < n and line[pos] == '"':
            start = pos
            pos += 1
            parts: list[str] = []
            while True:
                if pos >= n:
                    raise ValueError(f"unterminated quoted field starting at column {start + 1}")
                ch = line[pos]
                if ch == '"':
                    if pos + 1 < n and line[pos + 1] == '"':
                        parts.append('"')
                        pos += 2
                        continue
                    pos += 1
                    break
                parts.append(ch)
                pos += 1
            if pos < n and line[pos] != ",":
                raise ValueError(f"unexpected character after closing quote at column {pos + 1}")
            fields.append(("".join(parts), True))
        else:
            end = line.find(",", pos)
            if end == -1:
                end = n
            fields.append((line[pos:end], False))
            pos = end
        if pos >= n:
            return fields
        pos += 1  # the comma
        if pos >= n:
            fields.append(("", False))
            return fields


def _format_csv_field(content: CellContent) -> str:
    raw = content.raw
    if raw == "":
        return ""
    resniffed = sniff_cell(raw)
    needs_quote = (
        "," in raw
        or '"' in raw
        or raw.startswith(":::")
        or type(resniffed.parsed) is not type(content.parsed)
        or resniffed.parsed != content.parsed
    )
    if needs_quote:
        return '"' + raw.replace('"', '""') + '"'
    return raw


# --- fence attributes --------------------------------------------------------


def _unescape_attr(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append("\n" if nxt == "n" else nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _escape_attr(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def _parse_attrs(text: str, lineno: int, diags: list[Diagnostic]) -> dict[str, str]:
    attrs: dict[str, str] = {}
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = re.match(r"([A-Za-z][A-Za-z0-9_-]*)=", text[pos:])
        if not m:
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: malformed attribute near {text[pos:pos + 12]!r}"))
            return attrs
        key = m.group(1)
        pos += m.end()
        if pos < n and text[pos] == '"':
            pos += 1
            parts: list[str] = []
            while pos < n and text[pos] != '"':
                if text[pos] == "\\" and pos + 1 < n:
                    parts.append(text[pos:pos + 2])
                    pos += 2
                    continue
                parts.append(text[pos])
                pos += 1
            if pos >= n:
                diags.append(Diagnostic("ParseError", "error", f"line {lineno}: unterminated attribute value for {key!r}"))
                return attrs
            pos += 1
            attrs[key] = _unescape_attr("".join(parts))
        else:
            end = pos
            while end < n and not text[end].isspace():
                end += 1
            attrs[key] = text[pos:end]
            pos = end
    return attrs


def _format_attrs(pairs: list[tuple[str, str]]) -> str:
    out = []
    for key, value in pairs:
        if _BARE_ATTR_RE.fullmatch(value):
            out.append(f"{key}={value}")
        else:
            out.append(f'{key}="{_escape_attr(value)}"')
    return " ".join(out)


# --- parsing -----------------------------------------------------------------


def _canonical_expr(text: str, ctx: str | None, lineno: int, where: str, diags: list[Diagnostic]) -> str:
    text = text.strip()
    try:
        return format_expr(parse_expr(text, ctx=ctx))
    except FormulaParseError as e:
        diags.append(Diagnostic("ParseError", "warning", f"line {lineno}: {where}: {e.message}"))
        return text


def parse_lsheet(text: str) -> tuple[Document, list[Diagnostic]]:
    """Parse .lsheet text into a Document plus per-line diagnostics.

    Raises LsheetFatalError for an unterminated fence; everything else is
    reported as a diagnostic and parsing continues.
    """
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    diags: list[Diagnostic] = []
    meta: dict[str, str] = {}

    i = 0
    n = len(lines)
    while i < n:
        m = _META_RE.fullmatch(lines[i])
        if not m:
            break
        key, value = m.group(1), m.group(2)
        if key == "lsheet":
            if value.strip() != "1":
                diags.append(Diagnostic("ParseError", "error", f"line {i + 1}: unsupported format version {value.strip()!r}"))
        else:
            meta[key] = value
        i += 1
    meta.setdefault("title", "untitled")

    # (kind tag, payload, explicit id or None)
    raw_chunks: list[tuple[str, object, str | None]] = []
    run: list[str] = []

    def flush_run():
        if run:
            raw_chunks.append(("narrative_plain", "\n".join(run), None))
            run.clear()

    while i < n:
        line = lines[i]
        if line.strip() == "":
            flush_run()
            i += 1
            continue
        if line.startswith(("\\#", "\\:::", "\\@")):
            run.append(line[1:])
            i += 1
            continue
        if line.startswith("#"):
            m = _HEADING_RE.fullmatch(line)
            if not m:
                diags.append(Diagnostic("ParseError", "warning", f"line {i + 1}: malformed heading treated as text"))
                run.append(line)
                i += 1
                continue
            flush_run()
            rest = m.group(2)
            explicit = None
            id_m = _ID_MARKER_RE.fullmatch(rest)
            if id_m:
                rest, explicit = id_m.group(1), id_m.group(2)
            raw_chunks.append(("heading", (len(m.group(1)), rest), explicit))
            i += 1
            continue
        if line.startswith(":::"):
            flush_run()
            opener_line = i + 1
            header = line[3:].strip()
            if not header:
                diags.append(Diagnostic("ParseError", "error", f"line {i + 1}: fence closer without an opener"))
                i += 1
                continue
            kind, _, attr_text = header.partition(" ")
            attrs = _parse_attrs(attr_text, opener_line, diags)
            body: list[str] = []
            i += 1
            while i < n and lines[i] != ":::":
                body.append(lines[i])
                i += 1
            if i >= n:
                raise LsheetFatalError("UnterminatedFence: fence opened here is never closed", opener_line)
            i += 1
            if kind not in _FENCE_KINDS:
                diags.append(Diagnostic("ParseError", "error", f"line {opener_line}: unknown block kind {kind!r}"))
                continue
            raw_chunks.append(("fence", (kind, attrs, body, opener_line), attrs.get("id")))
            continue
        if _META_RE.fullmatch(line):
            diags.append(
                Diagnostic("ParseError", "warning", f"line {i + 1}: metadata after content treated as text (escape with \\@)")
            )
            run.append(line)
            i += 1
            continue
        run.append(line)
        i += 1
    flush_run()

    counters = {name: 0 for name in AUTO_ID_KINDS.values()}

    def next_auto(kind: str) -> str:
        counters[kind] += 1
        return f"{kind}-{counters[kind]}"

    chunks: list[Chunk] = []
    for tag, payload, explicit in raw_chunks:
        if tag == "heading":
            level, title = payload
            chunks.append(Heading(id=explicit or next_auto("heading"), level=level, title=title))
        elif tag == "narrative_plain":
            chunks.append(Narrative(id=next_auto("narrative"), body=payload))
        else:
            chunk = _build_fenced(payload, explicit, next_auto, diags)
            if chunk is not None:
                chunks.append(chunk)

    return Document(meta=meta, chunks=tuple(chunks)), diags


def _build_fenced(payload, explicit, next_auto, diags: list[Diagnostic]) -> Chunk | None:
    kind, attrs, body, lineno = payload
    if kind == "narrative":
        body_lines = [line[1:] if line.startswith("\\") else line for line in body]
        is_stub = attrs.get("stub") == "true"
        return Narrative(id=explicit or next_auto("narrative"), body="\n".join(body_lines), is_stub=is_stub)
    if kind == "formula":
        content = [line for line in body if line.strip()]
        if len(content) != 1:
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: formula block needs exactly one body line"))
            if not content:
                return None
        line = content[0].strip()
        name_attr = attrs.get("name")
        m = _FORMULA_LINE_RE.fullmatch(line)
        if m and (name_attr is None or m.group(1) == name_attr):
            name, expr_text = m.group(1), m.group(2)
        elif name_attr is not None:
            name, expr_text = name_attr, line
        else:
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: formula has no name (use `name = expr` or a name attribute)"))
            return None
        return Formula(
            id=name,
            expr_text=_canonical_expr(expr_text, None, lineno, f"formula {name!r}", diags),
            desc=attrs.get("desc", ""),
        )
    if kind == "grid":
        name = attrs.get("name")
        if not name:
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: grid block needs a name attribute"))
            return None
        cells: dict[CellAddr, CellContent] = {}
        max_cols = 0
        for row_offset, row_line in enumerate(body, start=1):
            try:
                fields = _parse_csv_record(row_line)
            except ValueError as e:
                diags.append(
                    Diagnostic("ParseError", "error", f"line {lineno + row_offset}: {e}", chunk_id=name)
                )
                continue
            max_cols = max(max_cols, len(fields))
            for col, (raw, quoted) in enumerate(fields, start=1):
                content = sniff_cell(raw, quoted=quoted)
                if content.parsed is not EMPTY:
                    cells[CellAddr(row=row_offset, col=col)] = content
        n_rows, n_cols = len(body), max_cols
        for attr, fallback in (("rows", n_rows), ("cols", n_cols)):
            if attr in attrs:
                try:
                    declared = int(attrs[attr])
                except ValueError:
                    diags.append(Diagnostic("ParseError", "error", f"line {lineno}: bad {attr} attribute {attrs[attr]!r}"))
                    continue
                if attr == "rows":
                    n_rows = max(n_rows, declared)
                else:
                    n_cols = max(n_cols, declared)
        grid = Grid(id=name, cells=cells, n_rows=n_rows, n_cols=n_cols)
        for addr in grid.populated():
            parsed = grid.cells[addr].parsed
            if isinstance(parsed, FormulaCell):
                _canonical_expr(parsed.expr_text, name, lineno + addr.row, f"cell {name}!{addr.text}", diags)
        return grid
    if kind == "assert":
        content = [line for line in body if line.strip()]
        if len(content) != 1:
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: assert block needs exactly one body line"))
            if not content:
                return None
        cid = explicit or next_auto("assertion")
        return Assertion(
            id=cid,
            expr_text=_canonical_expr(content[0], None, lineno, f"assertion {cid!r}", diags),
            msg=attrs.get("msg", ""),
        )
    if kind == "asset":
        if any(line.strip() for line in body):
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: asset blocks take no body"))
        src = attrs.get("src")
        if not src:
            diags.append(Diagnostic("ParseError", "error", f"line {lineno}: asset block needs a src attribute"))
            return None
        return Asset(id=explicit or next_auto("asset"), src=src, caption=attrs.get("caption", ""))
    # theme
    name = attrs.get("name")
    if not name:
        diags.append(Diagnostic("ParseError", "error", f"line {lineno}: theme block needs a name attribute"))
        return None
    members: list[str] = []
    for offset, line in enumerate(body, start=1):
        member = line.strip()
        if not member:
            continue
        if not re.fullmatch(r"[a-z][a-z0-9_-]*", member):
            diags.append(Diagnostic("ParseError", "error", f"line {lineno + offset}: bad theme member {member!r}", chunk_id=name))
            continue
        members.append(member)
    return ThemeDef(id=name, members=tuple(members))


# --- serialization -----------------------------------------------------------


def _escape_plain_line(line: str) -> str:
    if line.startswith(("#", ":::", "@")):
        return "\\" + line
    return line


def serialize_lsheet(doc: Document) -> str:
    """Canonical text form; parse_lsheet(serialize_lsheet(d)) reproduces d
    (for documents at revision 1, the only revision files can carry)."""
    out: list[str] = []
    out.append(f"@title: {doc.meta.get('title', 'untitled')}")
    for key in sorted(doc.meta):
        if key != "title":
            out.append(f"@{key}: {doc.meta[key]}")

    counters = {name: 0 for name in AUTO_ID_KINDS.values()}

    def id_is_auto(chunk: Chunk) -> bool:
        """True when re-parsing without an explicit marker reproduces the id;
        consumes the ordinal exactly when the parser would."""
        kind = AUTO_ID_KINDS.get(type(chunk))
        if kind is None:
            return True  # grids/formulas/themes always carry their name
        candidate = f"{kind}-{counters[kind] + 1}"
        if chunk.id == candidate:
            counters[kind] += 1
            return True
        return False

    for chunk in doc.chunks:
        out.append("")
        if isinstance(chunk, Heading):
            marker_lookalike = bool(_ID_MARKER_RE.fullmatch(chunk.title))
            auto = False if marker_lookalike else id_is_auto(chunk)
            line = "#" * chunk.level + " " + chunk.title
            if not auto:
                line += f" {{#{chunk.id}}}"
            out.append(line)
        elif isinstance(chunk, Narrative):
            body_lines = chunk.body.split("\n")
            needs_fence = (
                chunk.is_stub
                or any(not line.strip() for line in body_lines)
                or any(line.startswith("\\") for line in body_lines)
            )
            if needs_fence:
                auto = id_is_auto(chunk)
                pairs = [] if auto else [("id", chunk.id)]
                if chunk.is_stub:
                    pairs.append(("stub", "true"))
                header = "::: narrative"
                if pairs:
                    header += " " + _format_attrs(pairs)
                out.append(header)
                for line in body_lines:
                    if line.startswith((":::", "\\")):
                        line = "\\" + line
                    out.append(line)
                out.append(":::")
            else:
                auto = id_is_auto(chunk)
                if not auto:
                    pairs = [("id", chunk.id)]
                    out.append("::: narrative " + _format_attrs(pairs))
                    for line in body_lines:
                        if line.startswith((":::", "\\")):
                            line = "\\" + line
                        out.append(line)
                    out.append(":::")
                else:
                    out.extend(_escape_plain_line(line) for line in body_lines)
        elif isinstance(chunk, Grid):
            pairs = [("name", chunk.id), ("rows", str(chunk.n_rows)), ("cols", str(chunk.n_cols))]
            out.append("::: grid " + _format_attrs(pairs))
            by_row: dict[int, dict[int, CellContent]] = {}
            for addr, content in chunk.cells.items():
                by_row.setdefault(addr.row, {})[addr.col] = content
            for row in range(1, chunk.n_rows + 1):
                row_cells = by_row.get(row, {})
                last = max(row_cells) if row_cells else 0
                fields = []
                for col in range(1, last + 1):
                    content = row_cells.get(col)
                    fields.append(_format_csv_field(content) if content is not None else "")
                out.append(",".join(fields))
            out.append(":::")
        elif isinstance(chunk, Formula):
            pairs = [("name", chunk.id)]
            if chunk.desc:
                pairs.append(("desc", chunk.desc))
            out.append("::: formula " + _format_attrs(pairs))
            out.append(f"{chunk.id} = {_reformatted(chunk.expr_text, None)}")
            out.append(":::")
        elif isinstance(chunk, Assertion):
            auto = id_is_auto(chunk)
            pairs = [] if auto else [("id", chunk.id)]
            if chunk.msg:
                pairs.append(("msg", chunk.msg))
            header = "::: assert"
            if pairs:
                header += " " + _format_attrs(pairs)
            out.append(header)
            out.append(_reformatted(chunk.expr_text, None))
            out.append(":::")
        elif isinstance(chunk, Asset):
            auto = id_is_auto(chunk)
            pairs = [] if auto else [("id", chunk.id)]
            pairs.append(("src", chunk.src))
            if chunk.caption:
                pairs.append(("caption", chunk.caption))
            out.append("::: asset " + _format_attrs(pairs))
            out.append(":::")
        elif isinstance(chunk, ThemeDef):
            out.append("::: theme " + _format_attrs([("name", chunk.id)]))
            out.extend(chunk.members)
            out.append(":::")
    return "\n".join(out) + "\n"


def _reformatted(expr_text: str, ctx: str | None) -> str:
    try:
        return format_expr(parse_expr(expr_text, ctx=ctx))
    except FormulaParseError:
        return expr_text


# --- CSV import --------------------------------------------------------------


def sanitize_grid_name(stem: str) -> str:
    """A valid chunk id derived from a filename stem."""
    name = re.sub(r"[^a-z0-9_-]+", "_", stem.lower()).strip("_-") or "sheet"
    if not name[0].isalpha():
        name = "g_" + name
    name = name[:60].rstrip("_-")
    if re.fullmatch(r"[A-Za-z]{1,3}[0-9]+", name):
        name += "_grid"
    return name


def import_grid_csv(text: str, name: str) -> Document:
    """A whole CSV file as a single-grid document, marked imported=true so
    the classifier applies the long-text-cell heuristic."""
    if not is_valid_id(name):
        raise CsvImportError(f"invalid grid name {name!r}", 0, 0)
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    cells: dict[CellAddr, CellContent] = {}
    max_cols = 0
    for row, line in enumerate(lines, start=1):
        try:
            fields = _parse_csv_record(line)
        except ValueError as e:
            match = re.search(r"column (\d+)", str(e))
            raise CsvImportError(str(e), row, int(match.group(1)) if match else 0) from None
        max_cols = max(max_cols, len(fields))
        for col, (raw, quoted) in enumerate(fields, start=1):
            content = sniff_cell(raw, quoted=quoted)
            if content.parsed is not EMPTY:
                cells[CellAddr(row=row, col=col)] = content
    grid = Grid(id=name, cells=cells, n_rows=len(lines), n_cols=max_cols)
    return Document(meta={"title": name, "imported": "true"}, chunks=(grid,))


# --- canonical JSON ----------------------------------------------------------


def value_to_obj(v: Value) -> dict:
    if isinstance(v, ErrorValue):
        return {"t": "e", "v": v.kind}
    if isinstance(v, bool):
        return {"t": "b", "v": v}
    if isinstance(v, float):
        x = clamp_number(v)
        if x == int(x) and abs(x) < 1e16:
            return {"t": "n", "v": int(x)}
        return {"t": "n", "v": x}
    if v is EMPTY:
        return {"t": "empty"}
    return {"t": "s", "v": v}


def diagnostic_to_obj(d: Diagnostic) -> dict:
    obj = {"kind": d.kind, "severity": d.severity, "message": d.message}
    if d.chunk_id is not None:
        obj["chunk"] = d.chunk_id
    if d.cell is not None:
        obj["cell"] = d.cell.text
    if d.cycle_path is not None:
        obj["cycle_path"] = list(d.cycle_path)
    return obj


def values_to_json(result: EvalResult) -> str:
    """Keys sorted ascending; numbers use the 15-significant-digit shortest
    round-trip rule; byte-identical for equal results."""
    obj = {
        "values": {key: value_to_obj(result.values[key]) for key in sorted(result.values)},
        "diagnostics": [diagnostic_to_obj(d) for d in result.diagnostics],
    }
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def chunk_to_obj(chunk: Chunk) -> dict:
    obj: dict = {"id": chunk.id, "kind": kind_name(chunk)}
    if isinstance(chunk, Heading):
        obj.update(level=chunk.level, title=chunk.title)
    elif isinstance(chunk, Narrative):
        obj.update(body=chunk.body, stub=chunk.is_stub)
    elif isinstance(chunk, Grid):
        cells = {}
        for addr in sorted(chunk.cells):
            content = chunk.cells[addr]
            entry: dict = {"raw": content.raw}
            if isinstance(content.parsed, str) and sniff_cell(content.raw).parsed != content.parsed:
                entry["q"] = True
            cells[addr.text] = entry
        obj.update(name=chunk.id, rows=chunk.n_rows, cols=chunk.n_cols, cells=cells)
    elif isinstance(chunk, Formula):
        obj.update(name=chunk.id, expr=chunk.expr_text, desc=chunk.desc)
    elif isinstance(chunk, Assertion):
        obj.update(expr=chunk.expr_text, msg=chunk.msg)
    elif isinstance(chunk, Asset):
        obj.update(src=chunk.src, caption=chunk.caption)
    else:
        obj.update(name=chunk.id, members=list(chunk.members))
    return obj


def chunk_from_obj(obj: dict) -> Chunk:
    try:
        kind = obj["kind"]
        cid = obj["id"]
        if kind == "heading":
            return Heading(id=cid, level=int(obj["level"]), title=obj["title"])
        if kind == "narrative":
            return Narrative(id=cid, body=obj["body"], is_stub=bool(obj.get("stub", False)))
        if kind == "grid":
            cells = {}
            for addr_text, entry in obj.get("cells", {}).items():
                addr = CellAddr.parse(addr_text)
                content = sniff_cell(entry["raw"], quoted=bool(entry.get("q", False)))
                if content.parsed is not EMPTY:
                    cells[addr] = content
            return Grid(id=cid, cells=cells, n_rows=int(obj["rows"]), n_cols=int(obj["cols"]))
        if kind == "formula":
            return Formula(id=cid, expr_text=obj["expr"], desc=obj.get("desc", ""))
        if kind == "assertion":
            return Assertion(id=cid, expr_text=obj["expr"], msg=obj.get("msg", ""))
        if kind == "asset":
            return Asset(id=cid, src=obj["src"], caption=obj.get("caption", ""))
        if kind == "theme":
            return ThemeDef(id=cid, members=tuple(obj.get("members", ())))
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed chunk object: {e}") from None
    raise ValueError(f"unknown chunk kind {obj.get('kind')!r}")


def doc_to_obj(doc: Document) -> dict:
    return {
        "revision": doc.revision,
        "meta": dict(sorted(doc.meta.items())),
        "chunks": [chunk_to_obj(c) for c in doc.chunks],
    }


def edit_from_obj(obj: dict) -> Edit:
    try:
        op = obj["op"]
        if op == "set_cell":
            return SetCell(grid=obj["grid"], addr=CellAddr.parse(obj["addr"]), raw=obj["raw"])
        if op == "set_chunk":
            return SetChunk(chunk_id=obj["id"], chunk=chunk_from_obj(obj["chunk"]))
        if op == "insert_chunk":
            return InsertChunk(index=int(obj["index"]), chunk=chunk_from_obj(obj["chunk"]))
        if op == "delete_chunk":
            return DeleteChunk(chunk_id=obj["id"])
        if op == "move_chunk":
            return MoveChunk(chunk_id=obj["id"], index=int(obj["index"]))
        if op == "set_theme":
            return SetTheme(name=obj["name"], members=tuple(obj["members"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed edit object: {e}") from None
    raise ValueError(f"unknown edit op {obj.get('op')!r}")
