"""TF-IDF reuse suggestions over a library of documents.

Each indexable chunk becomes a bag of words drawn from its narrative body,
its name, its description, and the identifiers inside its expressions.
Stub narratives, headings, assets and theme definitions carry nothing worth
retrieving and are skipped. tf is the raw count, idf = ln(N/(1+df)) + 1
with N the indexed chunk count, similarity is the cosine.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyLibrary, FormulaParseError
from .formula import Binary, Call, CellRef, Expr, NameRef, RangeRef, Unary, parse_expr
from .model import Assertion, Chunk, Document, Formula, FormulaCell, Grid, Narrative

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def _expr_identifiers(expr_text: str, ctx: str | None) -> list[str]:
    try:
        expr = parse_expr(expr_text, ctx=ctx)
    except FormulaParseError:
        return []
    names: list[str] = []

    def walk(e: Expr) -> None:
        if isinstance(e, NameRef):
            names.append(e.name)
        elif isinstance(e, (CellRef, RangeRef)):
            if e.grid:
                names.append(e.grid)
        elif isinstance(e, Unary):
            walk(e.arg)
        elif isinstance(e, Binary):
            walk(e.lhs)
            walk(e.rhs)
        elif isinstance(e, Call):
            names.append(e.fn)
            for arg in e.args:
                walk(arg)

    walk(expr)
    return names


def chunk_tokens(chunk: Chunk) -> list[str]:
    if isinstance(chunk, Narrative):
        return [] if chunk.is_stub else tokenize(chunk.body)
    if isinstance(chunk, Formula):
        parts = [chunk.id, chunk.desc, " ".join(_expr_identifiers(chunk.expr_text, None))]
        return tokenize(" ".join(parts))
    if isinstance(chunk, Assertion):
        return tokenize(chunk.msg + " " + " ".join(_expr_identifiers(chunk.expr_text, None)))
    if isinstance(chunk, Grid):
        parts = [chunk.id]
        for addr in chunk.populated():
            parsed = chunk.cells[addr].parsed
            if isinstance(parsed, FormulaCell):
                parts.extend(_expr_identifiers(parsed.expr_text, chunk.id))
        return tokenize(" ".join(parts))
    return []


@dataclass(frozen=True)
class Suggestion:
    doc_path: str
    chunk_id: str
    score: float


@dataclass
class _Entry:
    doc_path: str
    chunk_id: str
    counts: dict[str, int]


@dataclass
class LibraryIndex:
    entries: list[_Entry] = field(default_factory=list)
    df: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.entries)


def _load(path: Path) -> Document:
    from .lsheet import import_grid_csv, parse_lsheet, sanitize_grid_name

    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        return import_grid_csv(text, sanitize_grid_name(path.stem))
    doc, _ = parse_lsheet(text)
    return doc


def index_library(paths) -> LibraryIndex:
    """Deterministic index over the given files (sorted by path); unreadable
    files are skipped and recorded in .warnings."""
    index = LibraryIndex()
    for path in sorted(Path(p) for p in paths):
        try:
            doc = _load(path)
        except Exception as e:  # unreadable input of any flavor
            index.warnings.append(f"{path}: {e}")
            continue
        for chunk in doc.chunks:
            tokens = chunk_tokens(chunk)
            if not tokens:
                continue
            counts: dict[str, int] = {}
            for token in tokens:
                counts[token] = counts.get(token, 0) + 1
            index.entries.append(_Entry(doc_path=str(path), chunk_id=chunk.id, counts=counts))
            for token in counts:
                index.df[token] = index.df.get(token, 0) + 1
    return index


def _idf(index: LibraryIndex, token: str) -> float:
    return math.log(index.n / (1 + index.df.get(token, 0))) + 1.0


def _weights(index: LibraryIndex, counts: dict[str, int]) -> dict[str, float]:
    return {token: counts[token] * _idf(index, token) for token in sorted(counts)}


def suggest_reuse(query: str, index: LibraryIndex, k: int = 5) -> list[Suggestion]:
    """Top-k cosine matches for the query; zero scores are filtered out.

    Ties break by (score desc, doc_path asc, chunk_id asc).
    """
    if index.n == 0:
        raise EmptyLibrary("no indexed chunks to suggest from")
    if k < 1:
        raise ValueError("k must be >= 1")
    query_counts: dict[str, int] = {}
    for token in tokenize(query):
        query_counts[token] = query_counts.get(token, 0) + 1
    q = _weights(index, query_counts)
    q_norm = math.sqrt(math.fsum(w * w for w in q.values()))
    if q_norm == 0.0:
        return []
    scored: list[Suggestion] = []
    for entry in index.entries:
        weights = _weights(index, entry.counts)
        dot = math.fsum(q[token] * weight for token, weight in weights.items() if token in q)
        if dot == 0.0:
            continue
        norm = math.sqrt(math.fsum(w * w for w in weights.values()))
        scored.append(Suggestion(doc_path=entry.doc_path, chunk_id=entry.chunk_id, score=dot / (norm * q_norm)))
    scored.sort(key=lambda s: (-s.score, s.doc_path, s.chunk_id))
    return scored[:k]
