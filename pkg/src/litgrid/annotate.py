"""Annotation-level classification, corpus survey, documentation stubs, and
scaffolding templates.

Levels form a ladder: NA (not computational) < Implicit < Explicit <
Literate. A document is computational when it contains at least one formula
cell or formula chunk. Implicit vs Explicit hinges on narrative volume;
Literate additionally needs structure (headings) and documentation coverage
of its named computables. The thresholds are invented operationalizations
with config overrides; the defaults are frozen by the tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .config import Config, DEFAULT_CONFIG
from .errors import UnknownTemplate
from .model import (
    Assertion,
    Chunk,
    Document,
    Formula,
    FormulaCell,
    Grid,
    Heading,
    Narrative,
)

LEVELS = ("NA", "Implicit", "Explicit", "Literate")


@dataclass(frozen=True)
class AnnotationReport:
    is_computational: bool
    level: str
    narrative_words: int
    heading_count: int
    named_computables: int
    documented_computables: int
    doc_coverage: float


def _word_count(text: str) -> int:
    return len(text.split())


def classify(doc: Document, config: Config = DEFAULT_CONFIG) -> AnnotationReport:
    """Annotation level of one document.

    Narrative words come from non-stub Narrative bodies; for imported grids
    (meta imported=true) long text cells count too, short label cells do
    not. A named computable (Formula chunk or Grid) is documented when a
    non-stub Narrative immediately precedes it or it carries a non-empty
    desc; coverage over zero computables is vacuously 1.
    """
    has_formula_cell = any(
        isinstance(content.parsed, FormulaCell)
        for chunk in doc.chunks
        if isinstance(chunk, Grid)
        for content in chunk.cells.values()
    )
    is_computational = has_formula_cell or any(isinstance(c, Formula) for c in doc.chunks)

    words = sum(_word_count(c.body) for c in doc.chunks if isinstance(c, Narrative) and not c.is_stub)
    if doc.meta.get("imported") == "true":
        for chunk in doc.chunks:
            if isinstance(chunk, Grid):
                for content in chunk.cells.values():
                    if isinstance(content.parsed, str):
                        n = _word_count(content.parsed)
                        if n > config.imported_label_max_words:
                            words += n

    heading_count = sum(1 for c in doc.chunks if isinstance(c, Heading))

    named = 0
    documented = 0
    for i, chunk in enumerate(doc.chunks):
        if isinstance(chunk, (Formula, Grid)):
            named += 1
            if _is_documented(doc.chunks, i):
                documented += 1
    coverage = documented / named if named else 1.0

    if not is_computational:
        level = "NA"
    elif words < config.explicit_min_words:
        level = "Implicit"
    elif heading_count >= config.literate_min_headings and coverage >= config.literate_min_coverage:
        level = "Literate"
    else:
        level = "Explicit"

    return AnnotationReport(
        is_computational=is_computational,
        level=level,
        narrative_words=words,
        heading_count=heading_count,
        named_computables=named,
        documented_computables=documented,
        doc_coverage=coverage,
    )


def _is_documented(chunks: tuple[Chunk, ...], index: int) -> bool:
    chunk = chunks[index]
    if isinstance(chunk, Formula) and chunk.desc.strip():
        return True
    if index > 0:
        prev = chunks[index - 1]
        return isinstance(prev, Narrative) and not prev.is_stub
    return False


# --- corpus survey -----------------------------------------------------------


@dataclass(frozen=True)
class SurveyRow:
    path: str
    report: AnnotationReport | None  # None when the file was unreadable
    error: str = ""


@dataclass(frozen=True)
class SurveyStats:
    n_total: int
    n_computational: int
    n_implicit: int
    n_explicit: int
    n_literate: int
    n_unreadable: int
    pct_computational: float | None
    pct_implicit_of_comp: float | None
    pct_explicit_of_comp: float | None
    pct_literate_of_comp: float | None


@dataclass(frozen=True)
class SurveyResult:
    rows: tuple[SurveyRow, ...]
    stats: SurveyStats


def _pct(numerator: int, denominator: int) -> float | None:
    if denominator == 0:
        return None
    ratio = Decimal(100 * numerator) / Decimal(denominator)
    return float(ratio.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def load_document(path: Path) -> Document:
    """.lsheet or .csv file -> Document (CSV becomes an imported grid)."""
    from .lsheet import import_grid_csv, parse_lsheet, sanitize_grid_name

    text = Path(path).read_text(encoding="utf-8")
    if Path(path).suffix.lower() == ".csv":
        return import_grid_csv(text, sanitize_grid_name(Path(path).stem))
    doc, _ = parse_lsheet(text)
    return doc


def survey(paths, config: Config = DEFAULT_CONFIG) -> SurveyResult:
    """Classify every file and aggregate; rows ordered by path.

    Unreadable files are excluded from n_total and tallied separately;
    percentages are computed exactly from the counts (half-up, one decimal)
    and are None over an empty denominator.
    """
    rows: list[SurveyRow] = []
    for path in sorted(Path(p) for p in paths):
        try:
            doc = load_document(path)
        except Exception as e:
            rows.append(SurveyRow(path=str(path), report=None, error=str(e)))
            continue
        rows.append(SurveyRow(path=str(path), report=classify(doc, config)))

    reports = [r.report for r in rows if r.report is not None]
    n_unreadable = len(rows) - len(reports)
    n_total = len(reports)
    n_comp = sum(1 for r in reports if r.is_computational)
    n_implicit = sum(1 for r in reports if r.level == "Implicit")
    n_literate = sum(1 for r in reports if r.level == "Literate")
    n_explicit = sum(1 for r in reports if r.level in ("Explicit", "Literate"))

    stats = SurveyStats(
        n_total=n_total,
        n_computational=n_comp,
        n_implicit=n_implicit,
        n_explicit=n_explicit,
        n_literate=n_literate,
        n_unreadable=n_unreadable,
        pct_computational=_pct(n_comp, n_total),
        pct_implicit_of_comp=_pct(n_implicit, n_comp),
        pct_explicit_of_comp=_pct(n_explicit, n_comp),
        pct_literate_of_comp=_pct(n_literate, n_comp),
    )
    return SurveyResult(rows=tuple(rows), stats=stats)


# --- documentation stubs -------------------------------------------------------


@dataclass(frozen=True)
class StubInfo:
    target: str
    inserted: str


def _needs_stub(chunks: tuple[Chunk, ...], index: int) -> bool:
    chunk = chunks[index]
    if not isinstance(chunk, (Formula, Grid, Assertion)):
        return False
    if isinstance(chunk, Formula) and chunk.desc.strip():
        return False
    if index > 0 and isinstance(chunks[index - 1], Narrative):
        return False  # documented if non-stub, already stubbed otherwise
    return True


def generate_stubs(doc: Document) -> tuple[Document, list[StubInfo]]:
    """Insert a TODO stub narrative before every undocumented computable.

    Idempotent: an existing stub (or any narrative) immediately before the
    target suppresses insertion. Returns the document unchanged (same
    revision) when nothing was inserted.
    """
    taken = doc.ids()
    new_chunks: list[Chunk] = []
    infos: list[StubInfo] = []
    for i, chunk in enumerate(doc.chunks):
        if _needs_stub(doc.chunks, i):
            stub_id = f"stub-{chunk.id}"
            suffix = 1
            while stub_id in taken:
                suffix += 1
                stub_id = f"stub-{chunk.id}-{suffix}"
            taken.add(stub_id)
            new_chunks.append(Narrative(id=stub_id, body=f"TODO: describe {chunk.id}", is_stub=True))
            infos.append(StubInfo(target=chunk.id, inserted=stub_id))
        new_chunks.append(chunk)
    if not infos:
        return doc, []
    return replace(doc, chunks=tuple(new_chunks), revision=doc.revision + 1), infos


def pending_stubs(doc: Document) -> list[str]:
    """Ids of chunks generate_stubs would document, in document order."""
    return [c.id for i, c in enumerate(doc.chunks) if _needs_stub(doc.chunks, i)]


# --- templates -----------------------------------------------------------------

TEMPLATES = ("worked-problem", "model-doc")
_BASE_RE = re.compile(r"[a-z][a-z0-9_]*$")


def instantiate_template(name: str, base: str) -> list[Chunk]:
    """Scaffold chunks for a new document; all ids derive from base.

    base must be usable as a formula name (lowercase, underscores, not
    cell-shaped) since the scaffold wires an assertion to `<base>_result`.
    """
    if not _BASE_RE.fullmatch(base) or re.fullmatch(r"[a-z]{1,3}[0-9]+", base):
        raise ValueError(f"base {base!r} must match [a-z][a-z0-9_]* and not look like a cell address")
    if name == "worked-problem":
        return [
            Heading(id=base, level=1, title=base),
            Narrative(id=f"{base}_problem", body="TODO: state the problem", is_stub=True),
            Heading(id=f"{base}_data_h", level=2, title="Data"),
            Grid(id=f"{base}_data", cells={}, n_rows=2, n_cols=2),
            Heading(id=f"{base}_model_h", level=2, title="Model"),
            Narrative(id=f"{base}_model_note", body="TODO: describe the model", is_stub=True),
            Formula(id=f"{base}_result", expr_text="0"),
            Heading(id=f"{base}_check_h", level=2, title="Check"),
            Assertion(id=f"{base}_check", expr_text=f"{base}_result >= 0", msg="TODO: refine check"),
        ]
    if name == "model-doc":
        return [
            Heading(id=base, level=1, title=base),
            Narrative(id=f"{base}_overview", body="TODO: describe the model", is_stub=True),
            Heading(id=f"{base}_assumptions_h", level=2, title="Assumptions"),
            Narrative(id=f"{base}_assumptions", body="TODO: list the assumptions", is_stub=True),
        ]
    raise UnknownTemplate(f"no template named {name!r} (available: {', '.join(TEMPLATES)})")
