"""Themed presentation: table of contents, cross-references, term index,
value-spliced render trees, and self-contained HTML.

The render tree is the stable intermediate shared by the HTML weaver and the
browser UI; every displayed value is formatted from a supplied EvalResult
with the same rule the CLI uses, so a node renders identically everywhere.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from typing import Union

from .engine import EvalResult, cell_key
from .errors import FormulaParseError
from .formula import format_expr, parse_expr, refs_of
from .model import (
    Assertion,
    Asset,
    CellAddr,
    Diagnostic,
    Document,
    Formula,
    FormulaCell,
    Grid,
    Heading,
    Narrative,
    ThemeDef,
    theme_view,
)
from .values import EMPTY, ErrorValue, format_value

_SPLICE_RE = re.compile(r"\{\{([^{}]+)\}\}")
_LINK_RE = re.compile(r"\[\[([a-z][a-z0-9_-]*)\]\]")
_TERM_RE = re.compile(r"\(\(([^()]+)\)\)")


# --- table of contents --------------------------------------------------------


@dataclass(frozen=True)
class TocEntry:
    chunk_id: str
    level: int
    title: str
    children: tuple["TocEntry", ...] = ()


def toc(doc: Document, theme: str = "all") -> list[TocEntry]:
    """Heading chunks of the theme, nested by level; level jumps nest under
    the nearest shallower heading without synthesizing intermediates."""

    class _Node:
        def __init__(self, chunk: Heading):
            self.chunk = chunk
            self.children: list[_Node] = []

        def freeze(self) -> TocEntry:
            return TocEntry(
                chunk_id=self.chunk.id,
                level=self.chunk.level,
                title=self.chunk.title,
                children=tuple(child.freeze() for child in self.children),
            )

    roots: list[_Node] = []
    stack: list[_Node] = []
    for cid in theme_view(doc, theme):
        chunk = doc.chunk(cid)
        if not isinstance(chunk, Heading):
            continue
        node = _Node(chunk)
        while stack and stack[-1].chunk.level >= chunk.level:
            stack.pop()
        if stack:
            stack[-1].children.append(node)
        else:
            roots.append(node)
        stack.append(node)
    return [r.freeze() for r in roots]


# --- cross references and index -------------------------------------------------


def _chunk_of_node_key(key: str) -> str:
    return key.partition("!")[0]


def cross_refs(doc: Document) -> dict[str, list[str]]:
    """Referenced chunk id -> referrers in document order (deduplicated).

    Covers `[[id]]` and `{{id}}` markers in narratives and every reference
    inside expressions (cell formulas count as references from their grid).
    Unknown targets appear in the map too; compare against doc.ids() to flag
    them.
    """
    out: dict[str, list[str]] = {}

    def record(target: str, referrer: str) -> None:
        referrers = out.setdefault(target, [])
        if referrer not in referrers:
            referrers.append(referrer)

    for chunk in doc.chunks:
        if isinstance(chunk, Narrative):
            for m in _LINK_RE.finditer(chunk.body):
                record(m.group(1), chunk.id)
            for m in _SPLICE_RE.finditer(chunk.body):
                record(_chunk_of_node_key(m.group(1).strip()), chunk.id)
        elif isinstance(chunk, (Formula, Assertion)):
            for target in _expr_targets(chunk.expr_text, None):
                record(target, chunk.id)
        elif isinstance(chunk, Grid):
            for addr in chunk.populated():
                parsed = chunk.cells[addr].parsed
                if isinstance(parsed, FormulaCell):
                    for target in _expr_targets(parsed.expr_text, chunk.id):
                        record(target, chunk.id)
    return {key: out[key] for key in sorted(out)}


def _expr_targets(expr_text: str, ctx: str | None) -> list[str]:
    try:
        expr = parse_expr(expr_text, ctx=ctx)
    except FormulaParseError:
        return []
    targets: set[str] = set()
    for ref in refs_of(expr, ctx or "?"):
        targets.add(getattr(ref, "grid", None) or getattr(ref, "name", None))
    targets.discard("?")
    return sorted(targets)


def term_index(doc: Document) -> dict[str, list[str]]:
    """`((term))` markers plus every Formula/Grid name, sorted
    case-insensitively; a duplicated marker within a chunk lists once."""
    out: dict[str, list[str]] = {}

    def record(term: str, cid: str) -> None:
        chunk_ids = out.setdefault(term, [])
        if cid not in chunk_ids:
            chunk_ids.append(cid)

    for chunk in doc.chunks:
        if isinstance(chunk, Narrative):
            for m in _TERM_RE.finditer(chunk.body):
                term = m.group(1).strip()
                if term:
                    record(term, chunk.id)
        elif isinstance(chunk, (Formula, Grid)):
            record(chunk.id, chunk.id)
    return {term: out[term] for term in sorted(out, key=lambda t: (t.casefold(), t))}


# --- render tree -----------------------------------------------------------------


@dataclass(frozen=True)
class TextRun:
    text: str


@dataclass(frozen=True)
class LinkRun:
    target: str
    known: bool


@dataclass(frozen=True)
class SpliceRun:
    node_key: str
    formatted: str
    ok: bool


Run = Union[TextRun, LinkRun, SpliceRun]


@dataclass(frozen=True)
class TableCell:
    text: str
    raw: str
    is_formula: bool
    is_error: bool


@dataclass(frozen=True)
class HeadingBlock:
    chunk_id: str
    level: int
    title: str


@dataclass(frozen=True)
class ParagraphBlock:
    chunk_id: str
    runs: tuple[Run, ...]


@dataclass(frozen=True)
class TableBlock:
    chunk_id: str
    name: str
    n_rows: int
    n_cols: int
    rows: tuple[tuple[TableCell, ...], ...]


@dataclass(frozen=True)
class FormulaBlock:
    chunk_id: str
    name: str
    expr: str
    value: str
    is_error: bool
    desc: str


@dataclass(frozen=True)
class AssertionBlock:
    chunk_id: str
    status: str  # pass | fail | error
    msg: str
    expr: str


@dataclass(frozen=True)
class ImageBlock:
    chunk_id: str
    src: str
    caption: str


@dataclass(frozen=True)
class StubBlock:
    chunk_id: str
    body: str


Block = Union[HeadingBlock, ParagraphBlock, TableBlock, FormulaBlock, AssertionBlock, ImageBlock, StubBlock]


@dataclass
class RenderTree:
    theme: str
    title: str
    blocks: tuple[Block, ...]
    diagnostics: list[Diagnostic] = field(default_factory=list)


def _narrative_runs(chunk: Narrative, doc: Document, result: EvalResult, diags: list[Diagnostic]) -> tuple[Run, ...]:
    runs: list[Run] = []
    body = chunk.body
    pos = 0
    for m in re.finditer(r"\[\[([a-z][a-z0-9_-]*)\]\]|\{\{([^{}]+)\}\}|\(\(([^()]+)\)\)", body):
        if m.start() > pos:
            runs.append(TextRun(body[pos:m.start()]))
        pos = m.end()
        if m.group(1) is not None:
            target = m.group(1)
            known = doc.chunk(target) is not None
            if not known:
                diags.append(
                    Diagnostic("UnknownRef", "warning", f"dangling link [[{target}]]", chunk_id=chunk.id)
                )
            runs.append(LinkRun(target=target, known=known))
        elif m.group(2) is not None:
            key = m.group(2).strip()
            if key in result.values:
                runs.append(SpliceRun(node_key=key, formatted=format_value(result.values[key]), ok=True))
            else:
                diags.append(
                    Diagnostic("UnknownRef", "warning", f"dangling value splice {{{{{key}}}}}", chunk_id=chunk.id)
                )
                runs.append(SpliceRun(node_key=key, formatted=f"#NAME? {key}", ok=False))
        else:
            runs.append(TextRun(m.group(3).strip()))
    if pos < len(body):
        runs.append(TextRun(body[pos:]))
    return tuple(runs)


def weave(doc: Document, theme: str, result: EvalResult) -> RenderTree:
    """Blocks in theme order with all values spliced from the EvalResult."""
    diags: list[Diagnostic] = []
    blocks: list[Block] = []
    for cid in theme_view(doc, theme):
        chunk = doc.chunk(cid)
        if chunk is None or isinstance(chunk, ThemeDef):
            continue
        if isinstance(chunk, Heading):
            blocks.append(HeadingBlock(chunk_id=chunk.id, level=chunk.level, title=chunk.title))
        elif isinstance(chunk, Narrative):
            if chunk.is_stub:
                blocks.append(StubBlock(chunk_id=chunk.id, body=chunk.body))
            else:
                blocks.append(ParagraphBlock(chunk_id=chunk.id, runs=_narrative_runs(chunk, doc, result, diags)))
        elif isinstance(chunk, Grid):
            rows = []
            for row in range(1, chunk.n_rows + 1):
                cells = []
                for col in range(1, chunk.n_cols + 1):
                    content = chunk.cells.get(CellAddr(row=row, col=col))
                    if content is None or content.parsed is EMPTY:
                        cells.append(TableCell(text="", raw="", is_formula=False, is_error=False))
                        continue
                    if isinstance(content.parsed, FormulaCell):
                        value = result.values.get(cell_key(chunk.id, CellAddr(row=row, col=col)), ErrorValue("REF"))
                        cells.append(
                            TableCell(
                                text=format_value(value),
                                raw=content.raw,
                                is_formula=True,
                                is_error=isinstance(value, ErrorValue),
                            )
                        )
                    else:
                        cells.append(
                            TableCell(text=format_value(content.parsed), raw=content.raw, is_formula=False, is_error=False)
                        )
                rows.append(tuple(cells))
            blocks.append(
                TableBlock(chunk_id=chunk.id, name=chunk.id, n_rows=chunk.n_rows, n_cols=chunk.n_cols, rows=tuple(rows))
            )
        elif isinstance(chunk, Formula):
            value = result.values.get(chunk.id, ErrorValue("NAME"))
            blocks.append(
                FormulaBlock(
                    chunk_id=chunk.id,
                    name=chunk.id,
                    expr=_display_expr(chunk.expr_text),
                    value=format_value(value),
                    is_error=isinstance(value, ErrorValue),
                    desc=chunk.desc,
                )
            )
        elif isinstance(chunk, Assertion):
            value = result.values.get(chunk.id)
            status = "pass" if value is True else "fail" if value is False else "error"
            blocks.append(
                AssertionBlock(chunk_id=chunk.id, status=status, msg=chunk.msg, expr=_display_expr(chunk.expr_text))
            )
        elif isinstance(chunk, Asset):
            blocks.append(ImageBlock(chunk_id=chunk.id, src=chunk.src, caption=chunk.caption))
    return RenderTree(theme=theme, title=doc.title, blocks=tuple(blocks), diagnostics=diags)


def _display_expr(expr_text: str) -> str:
    try:
        return format_expr(parse_expr(expr_text, ctx=None))
    except FormulaParseError:
        return expr_text


# --- HTML -------------------------------------------------------------------------

_CSS = """body{font-family:Georgia,serif;margin:0;display:flex}
nav{min-width:14em;padding:1em;background:#f4f1ea;border-right:1px solid #ddd}
nav ul{list-style:none;padding-left:1em;margin:0.2em 0}
main{padding:1em 2em;max-width:50em}
table{border-collapse:collapse;margin:0.5em 0}
td,th{border:1px solid #bbb;padding:0.2em 0.6em;text-align:right}
td.text{text-align:left}
.formula{background:#f8f8ff;padding:0.4em 0.8em;border-left:3px solid #88a;margin:0.5em 0}
.assertion.pass{color:#2a6e2a}
.assertion.fail,.assertion.error{color:#a02020;font-weight:bold}
.stub{color:#8a6d1a;background:#fdf6dd;padding:0.3em 0.6em}
.splice{background:#eef6ee;padding:0 0.2em}
.error,.dangling{color:#a02020}
.caption{font-style:italic;color:#555}
section.backmatter{border-top:1px solid #ccc;margin-top:2em;font-size:90%}
"""


def _esc(text: str) -> str:
    return html.escape(text, quote=True)


def _toc_html(entries: list[TocEntry] | tuple[TocEntry, ...]) -> str:
    if not entries:
        return ""
    items = []
    for entry in entries:
        items.append(
            f'<li><a href="#{_esc(entry.chunk_id)}">{_esc(entry.title)}</a>{_toc_html(entry.children)}</li>'
        )
    return "<ul>" + "".join(items) + "</ul>"


def _run_html(run: Run, rendered_ids: set[str]) -> str:
    if isinstance(run, TextRun):
        return _esc(run.text)
    if isinstance(run, LinkRun):
        if not run.known:
            return f'<span class="dangling">[[{_esc(run.target)}]]</span>'
        if run.target in rendered_ids:
            return f'<a href="#{_esc(run.target)}">{_esc(run.target)}</a>'
        # the target exists but is outside this theme: name it, no anchor
        return f"<span class=\"offtheme\">{_esc(run.target)}</span>"
    if run.ok:
        return f'<span class="splice" data-node="{_esc(run.node_key)}">{_esc(run.formatted)}</span>'
    return f'<span class="error">{_esc(run.formatted)}</span>'


def _block_html(block: Block, rendered_ids: set[str]) -> str:
    cid = _esc(block.chunk_id)
    if isinstance(block, HeadingBlock):
        tag = f"h{block.level}"
        return f'<{tag} id="{cid}">{_esc(block.title)}</{tag}>'
    if isinstance(block, ParagraphBlock):
        return f'<p id="{cid}">{"".join(_run_html(r, rendered_ids) for r in block.runs)}</p>'
    if isinstance(block, TableBlock):
        rows_html = []
        for row in block.rows:
            cells_html = []
            for cell in row:
                classes = []
                if not cell.is_formula and not cell.text.replace(".", "").replace("-", "").isdigit():
                    classes.append("text")
                if cell.is_error:
                    classes.append("error")
                cls = f' class="{" ".join(classes)}"' if classes else ""
                title = f' title="{_esc(cell.raw)}"' if cell.is_formula else ""
                cells_html.append(f"<td{cls}{title}>{_esc(cell.text)}</td>")
            rows_html.append("<tr>" + "".join(cells_html) + "</tr>")
        return f'<figure id="{cid}"><table>{"".join(rows_html)}</table><figcaption class="caption">{cid}</figcaption></figure>'
    if isinstance(block, FormulaBlock):
        desc = f' <span class="caption">{_esc(block.desc)}</span>' if block.desc else ""
        value_cls = "error" if block.is_error else "splice"
        return (
            f'<div class="formula" id="{cid}"><code>{_esc(block.name)} = {_esc(block.expr)}</code>'
            f' &rarr; <span class="{value_cls}">{_esc(block.value)}</span>{desc}</div>'
        )
    if isinstance(block, AssertionBlock):
        label = {"pass": "PASS", "fail": "FAIL", "error": "ERROR"}[block.status]
        msg = f" — {_esc(block.msg)}" if block.msg and block.status != "pass" else ""
        return (
            f'<div class="assertion {block.status}" id="{cid}">[{label}] <code>{_esc(block.expr)}</code>{msg}</div>'
        )
    if isinstance(block, ImageBlock):
        caption = f'<figcaption class="caption">{_esc(block.caption)}</figcaption>' if block.caption else ""
        return f'<figure id="{cid}"><img src="{_esc(block.src)}" alt="{_esc(block.caption)}">{caption}</figure>'
    return f'<div class="stub" id="{cid}">{_esc(block.body)}</div>'


def render_html(
    rt: RenderTree,
    toc_entries: list[TocEntry],
    xrefs: dict[str, list[str]],
    index: dict[str, list[str]],
) -> str:
    """One self-contained HTML document; byte-identical for equal inputs."""
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>{_esc(rt.title)}</title>",
        f"<style>{_CSS}</style>",
        "</head><body>",
        "<nav><strong>Contents</strong>",
        _toc_html(toc_entries) or "<p>(no headings)</p>",
        "</nav>",
        "<main>",
        f"<h1>{_esc(rt.title)}</h1>",
        f'<p class="caption">theme: {_esc(rt.theme)}</p>',
    ]
    known = {b.chunk_id for b in rt.blocks}
    parts.extend(_block_html(b, known) for b in rt.blocks)

    parts.append('<section class="backmatter" id="index-section"><h2>Index</h2><ul>')
    for term, chunk_ids in index.items():
        links = ", ".join(
            f'<a href="#{_esc(cid)}">{_esc(cid)}</a>' if cid in known else _esc(cid) for cid in chunk_ids
        )
        parts.append(f"<li>{_esc(term)}: {links}</li>")
    parts.append("</ul></section>")

    parts.append('<section class="backmatter" id="xref-section"><h2>Cross-references</h2><ul>')
    for target, referrers in xrefs.items():
        target_html = f'<a href="#{_esc(target)}">{_esc(target)}</a>' if target in known else f'<span class="dangling">{_esc(target)}</span>'
        ref_html = ", ".join(
            f'<a href="#{_esc(r)}">{_esc(r)}</a>' if r in known else _esc(r) for r in referrers
        )
        parts.append(f"<li>{target_html} &larr; {ref_html}</li>")
    parts.append("</ul></section>")

    parts.append("</main></body></html>")
    return "\n".join(parts) + "\n"


# --- JSON views (service payloads) ------------------------------------------------


def toc_to_obj(entries: list[TocEntry] | tuple[TocEntry, ...]) -> list[dict]:
    return [
        {"chunk_id": e.chunk_id, "level": e.level, "title": e.title, "children": toc_to_obj(e.children)}
        for e in entries
    ]


def run_to_obj(run: Run) -> dict:
    if isinstance(run, TextRun):
        return {"kind": "text", "text": run.text}
    if isinstance(run, LinkRun):
        return {"kind": "link", "target": run.target, "known": run.known}
    return {"kind": "splice", "node_key": run.node_key, "formatted": run.formatted, "ok": run.ok}


def block_to_obj(block: Block) -> dict:
    if isinstance(block, HeadingBlock):
        return {"kind": "heading", "chunk_id": block.chunk_id, "level": block.level, "title": block.title}
    if isinstance(block, ParagraphBlock):
        return {"kind": "paragraph", "chunk_id": block.chunk_id, "runs": [run_to_obj(r) for r in block.runs]}
    if isinstance(block, TableBlock):
        return {
            "kind": "table",
            "chunk_id": block.chunk_id,
            "name": block.name,
            "rows": block.n_rows,
            "cols": block.n_cols,
            "cells": [
                [
                    {"text": c.text, "raw": c.raw, "formula": c.is_formula, "error": c.is_error}
                    for c in row
                ]
                for row in block.rows
            ],
        }
    if isinstance(block, FormulaBlock):
        return {
            "kind": "formula",
            "chunk_id": block.chunk_id,
            "name": block.name,
            "expr": block.expr,
            "value": block.value,
            "error": block.is_error,
            "desc": block.desc,
        }
    if isinstance(block, AssertionBlock):
        return {"kind": "assertion", "chunk_id": block.chunk_id, "status": block.status, "msg": block.msg, "expr": block.expr}
    if isinstance(block, ImageBlock):
        return {"kind": "image", "chunk_id": block.chunk_id, "src": block.src, "caption": block.caption}
    return {"kind": "stub", "chunk_id": block.chunk_id, "body": block.body}


def render_tree_to_obj(rt: RenderTree) -> dict:
    from .lsheet import diagnostic_to_obj

    return {
        "theme": rt.theme,
        "title": rt.title,
        "blocks": [block_to_obj(b) for b in rt.blocks],
        "diagnostics": [diagnostic_to_obj(d) for d in rt.diagnostics],
    }
