"""Formula expression language: lexer, parser, canonical formatter, refs.

Precedence, lowest to highest: comparisons; `&`; `+ -`; `* /`; unary minus;
`^` (right-associative); atoms. Unary minus binds looser than `^`, so
`-2^2` is -(2^2) = -4.

Identifiers are `[A-Za-z_][A-Za-z0-9_]*`: a hyphen is always the minus
operator, so chunk ids containing `-` cannot be referenced from formulas.
An identifier shaped like a cell address (1-3 letters + digits) is a cell
reference; `grid!A1` and `grid!A1:B3` are the qualified forms. Bare cell
references are only legal inside a grid context.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import BareRefOutsideGrid, FormulaParseError, UnknownFunction, UnresolvedContext
from .model import CELL_SHAPED_RE, CellAddr
from .values import format_number

# fn name -> (min args, max args or None for variadic)
FUNCTIONS: dict[str, tuple[int, int | None]] = {
    "SUM": (1, None),
    "AVERAGE": (1, None),
    "MIN": (1, None),
    "MAX": (1, None),
    "COUNT": (1, None),
    "IF": (3, 3),
    "ABS": (1, 1),
    "ROUND": (2, 2),
    "AND": (1, None),
    "OR": (1, None),
    "NOT": (1, 1),
    "CONCAT": (1, None),
}

COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")
_FORMULA_ID_RE = re.compile(r"[a-z][a-z0-9_]*$")


@dataclass(frozen=True)
class NumberLit:
    value: float  # non-negative by construction; minus is always Unary


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class CellRef:
    grid: str | None
    addr: CellAddr


@dataclass(frozen=True)
class RangeRef:
    grid: str | None
    start: CellAddr  # normalized: start.row <= end.row, start.col <= end.col
    end: CellAddr


@dataclass(frozen=True)
class NameRef:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "-"
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Union[NumberLit, TextLit, BoolLit, CellRef, RangeRef, NameRef, Unary, Binary, Call]


@dataclass(frozen=True)
class RefCell:
    grid: str
    addr: CellAddr


@dataclass(frozen=True)
class RefRange:
    grid: str
    start: CellAddr
    end: CellAddr


@dataclass(frozen=True)
class RefName:
    name: str


Ref = Union[RefCell, RefRange, RefName]


# --- lexer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|<>|[=<>&+\-*/^(),!:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | text | ident | op | end
    value: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos] == '"':
            start = pos
            pos += 1
            parts: list[str] = []
            while True:
                if pos >= n:
                    raise FormulaParseError("unterminated text literal", start)
                ch = text[pos]
                if ch == '"':
                    if pos + 1 < n and text[pos + 1] == '"':
                        parts.append('"')
                        pos += 2
                        continue
                    pos += 1
                    break
                parts.append(ch)
                pos += 1
            tokens.append(_Token("text", "".join(parts), start))
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaParseError(f"unexpected character {text[pos]!r}", pos)
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        tokens.append(_Token(m.lastgroup, m.group(), m.start()))
    tokens.append(_Token("end", "", n))
    return tokens


# --- parser ---------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], ctx: str | None):
        self.tokens = tokens
        self.pos = 0
        self.ctx = ctx

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.value != op:
            raise FormulaParseError(f"expected {op!r}, found {self._describe(tok)}", tok.offset)
        return self.next()

    @staticmethod
    def _describe(tok: _Token) -> str:
        return "end of input" if tok.kind == "end" else repr(tok.value)

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value in ops

    def parse(self) -> Expr:
        e = self.comparison()
        tok = self.peek()
        if tok.kind != "end":
            raise FormulaParseError(f"unexpected {self._describe(tok)}", tok.offset)
        return e

    def comparison(self) -> Expr:
        e = self.concat()
        while self.at_op(*COMPARISON_OPS):
            op = self.next().value
            e = Binary(op, e, self.concat())
        return e

    def concat(self) -> Expr:
        e = self.additive()
        while self.at_op("&"):
            self.next()
            e = Binary("&", e, self.additive())
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.at_op("+", "-"):
            op = self.next().value
            e = Binary(op, e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.at_op("*", "/"):
            op = self.next().value
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.next()
            return Unary("-", self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        if self.at_op("^"):
            self.next()
            return Binary("^", e, self.unary())
        return e

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return NumberLit(float(tok.value))
        if tok.kind == "text":
            self.next()
            return TextLit(tok.value)
        if self.at_op("("):
            self.next()
            e = self.comparison()
            self.expect_op(")")
            return e
        if tok.kind == "ident":
            return self.identifier()
        raise FormulaParseError(f"expected expression, found {self._describe(tok)}", tok.offset)

    def identifier(self) -> Expr:
        tok = self.next()
        name = tok.value
        if name.upper() in ("TRUE", "FALSE"):
            return BoolLit(name.upper() == "TRUE")
        if self.at_op("("):
            return self.call(tok)
        if self.at_op("!"):
            # the `!` makes this position unambiguous, so a cell-shaped grid
            # name is tolerated here; validation rejects such ids at the
            # document level
            if not _FORMULA_ID_RE.fullmatch(name):
                raise FormulaParseError(f"invalid grid name {name!r}", tok.offset)
            self.next()
            return self.cell_or_range(grid=name)
        if CELL_SHAPED_RE.fullmatch(name):
            self.pos -= 1
            return self.cell_or_range(grid=None)
        if not _FORMULA_ID_RE.fullmatch(name):
            raise FormulaParseError(
                f"identifier {name!r} is not a valid name (names are lowercase words)", tok.offset
            )
        return NameRef(name)

    def cell_addr(self) -> tuple[CellAddr, _Token]:
        tok = self.peek()
        if tok.kind != "ident" or not CELL_SHAPED_RE.fullmatch(tok.value):
            raise FormulaParseError(f"expected cell address, found {self._describe(tok)}", tok.offset)
        self.next()
        return CellAddr.parse(tok.value), tok

    def cell_or_range(self, grid: str | None) -> Expr:
        start, start_tok = self.cell_addr()
        if self.at_op(":"):
            self.next()
            end, _ = self.cell_addr()
            lo = CellAddr(row=min(start.row, end.row), col=min(start.col, end.col))
            hi = CellAddr(row=max(start.row, end.row), col=max(start.col, end.col))
            if grid is None and self.ctx is None:
                raise BareRefOutsideGrid("bare range reference outside any grid context", start_tok.offset)
            return RangeRef(grid, lo, hi)
        if grid is None and self.ctx is None:
            raise BareRefOutsideGrid("bare cell reference outside any grid context", start_tok.offset)
        return CellRef(grid, start)

    def call(self, name_tok: _Token) -> Expr:
        fn = name_tok.value.upper()
        if fn not in FUNCTIONS:
            raise UnknownFunction(f"unknown function {name_tok.value!r}", name_tok.offset)
        self.expect_op("(")
        args: list[Expr] = []
        if not self.at_op(")"):
            args.append(self.comparison())
            while self.at_op(","):
                self.next()
                args.append(self.comparison())
        close = self.expect_op(")")
        lo, hi = FUNCTIONS[fn]
        if len(args) < lo or (hi is not None and len(args) > hi):
            expected = f"exactly {lo}" if hi == lo else f"at least {lo}" if hi is None else f"{lo}..{hi}"
            raise FormulaParseError(f"{fn} takes {expected} argument(s), got {len(args)}", close.offset)
        return Call(fn, tuple(args))


def parse_expr(text: str, ctx: str | None = None) -> Expr:
    """Parse a formula; ctx is the grid id bare cell references resolve against."""
    if not text.strip():
        raise FormulaParseError("empty expression", 0)
    return _Parser(_tokenize(text), ctx).parse()


# --- canonical formatting ---------------------------------------------------

_BINARY_PREC = {"=": 1, "<>": 1, "<": 1, "<=": 1, ">": 1, ">=": 1, "&": 2, "+": 3, "-": 3, "*": 4, "/": 4, "^": 6}
_UNARY_PREC = 5
_ATOM_PREC = 7


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _BINARY_PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def format_expr(e: Expr) -> str:
    """Canonical text: single spaces around binary operators, minimal parens.

    parse_expr(format_expr(e)) is structurally equal to e.
    """
    if isinstance(e, NumberLit):
        return format_number(e.value)
    if isinstance(e, TextLit):
        return '"' + e.value.replace('"', '""') + '"'
    if isinstance(e, BoolLit):
        return "TRUE" if e.value else "FALSE"
    if isinstance(e, CellRef):
        return f"{e.grid}!{e.addr.text}" if e.grid else e.addr.text
    if isinstance(e, RangeRef):
        prefix = f"{e.grid}!" if e.grid else ""
        return f"{prefix}{e.start.text}:{e.end.text}"
    if isinstance(e, NameRef):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        arg = format_expr(e.arg)
        if _prec(e.arg) < _UNARY_PREC:
            arg = f"({arg})"
        return f"-{arg}"
    if isinstance(e, Binary):
        p = _BINARY_PREC[e.op]
        lhs, rhs = format_expr(e.lhs), format_expr(e.rhs)
        if e.op == "^":
            # lhs is parsed at atom level, rhs at unary level (right-assoc)
            if _prec(e.lhs) < _ATOM_PREC:
                lhs = f"({lhs})"
            if _prec(e.rhs) < _UNARY_PREC:
                rhs = f"({rhs})"
        else:
            if _prec(e.lhs) < p:
                lhs = f"({lhs})"
            if _prec(e.rhs) <= p:
                rhs = f"({rhs})"
        return f"{lhs} {e.op} {rhs}"
    raise TypeError(f"not an expression: {e!r}")


# --- reference extraction ---------------------------------------------------


def refs_of(e: Expr, ctx: str | None = None) -> set[Ref]:
    """The exact set of cell/range/name references; ranges are not expanded."""
    out: set[Ref] = set()
    _collect_refs(e, ctx, out)
    return out


def _collect_refs(e: Expr, ctx: str | None, out: set[Ref]) -> None:
    if isinstance(e, CellRef):
        grid = e.grid or ctx
        if grid is None:
            raise UnresolvedContext(f"bare cell reference {e.addr.text} with no grid context")
        out.add(RefCell(grid, e.addr))
    elif isinstance(e, RangeRef):
        grid = e.grid or ctx
        if grid is None:
            raise UnresolvedContext(f"bare range reference {e.start.text}:{e.end.text} with no grid context")
        out.add(RefRange(grid, e.start, e.end))
    elif isinstance(e, NameRef):
        out.add(RefName(e.name))
    elif isinstance(e, Unary):
        _collect_refs(e.arg, ctx, out)
    elif isinstance(e, Binary):
        _collect_refs(e.lhs, ctx, out)
        _collect_refs(e.rhs, ctx, out)
    elif isinstance(e, Call):
        for arg in e.args:
            _collect_refs(arg, ctx, out)
