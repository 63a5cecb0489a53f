"""Independent brute-force evaluator used to cross-check the engine.

Resolves references by direct recursive tree-walking with memoization, with
no reference graph and no topological ordering. Documents fed to it must be
acyclic. It implements the documented value semantics from scratch and
deliberately imports nothing from litgrid.engine.
"""

from __future__ import annotations

import math

from litgrid.errors import BareRefOutsideGrid, FormulaParseError
from litgrid.formula import (
    Binary,
    BoolLit,
    Call,
    CellRef,
    NameRef,
    NumberLit,
    RangeRef,
    TextLit,
    Unary,
    parse_expr,
)
from litgrid.model import Assertion, CellAddr, Document, Formula, FormulaCell, Grid
from litgrid.values import EMPTY, ErrorValue, format_number


class _Set:
    """Values of a range or whole-grid reference, row-major."""

    def __init__(self, items):
        self.items = items


def _is_number(v) -> bool:
    return isinstance(v, float) and not isinstance(v, bool)


def _num(v):
    if isinstance(v, ErrorValue):
        return v
    if v is EMPTY:
        return 0.0
    if _is_number(v):
        return v
    return ErrorValue("VALUE")


def _text(v):
    if isinstance(v, ErrorValue):
        return v
    if v is EMPTY:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if _is_number(v):
        return format_number(v)
    return v


def _finite(x: float):
    if math.isnan(x) or math.isinf(x):
        return ErrorValue("VALUE")
    return x


def _round_half_away(x: float, digits: int) -> float:
    scale = 10.0 ** digits
    scaled = x * scale
    return math.copysign(math.floor(abs(scaled) + 0.5), x) / scale


def oracle_evaluate(doc: Document) -> dict:
    """Map every node key (literal cells included) to its value."""
    grids = {c.id: c for c in doc.chunks if isinstance(c, Grid)}
    formula_chunks = {c.id: c for c in doc.chunks if isinstance(c, Formula)}
    memo: dict[str, object] = {}
    walking: set[str] = set()

    def key_of(grid_id: str, addr: CellAddr) -> str:
        return f"{grid_id}!{addr.text}"

    def cell_value(grid_id: str, addr: CellAddr):
        grid = grids[grid_id]
        if not (1 <= addr.row <= grid.n_rows and 1 <= addr.col <= grid.n_cols):
            return ErrorValue("REF")
        content = grid.cells.get(addr)
        if content is None or content.parsed is EMPTY:
            return EMPTY
        if isinstance(content.parsed, FormulaCell):
            return computed(key_of(grid_id, addr), content.parsed.expr_text, grid_id)
        return content.parsed

    def computed(key: str, expr_text: str, ctx):
        if key in memo:
            return memo[key]
        if key in walking:
            raise AssertionError(f"oracle fed a cyclic document (through {key})")
        walking.add(key)
        try:
            expr = parse_expr(expr_text, ctx=ctx)
        except BareRefOutsideGrid:
            value = ErrorValue("REF")
        except FormulaParseError:
            value = ErrorValue("PARSE")
        else:
            value = walk(expr, ctx)
        walking.discard(key)
        memo[key] = value
        return value

    def range_values(grid_id: str, start: CellAddr, end: CellAddr):
        if grid_id not in grids:
            return ErrorValue("NAME")
        grid = grids[grid_id]
        items = []
        for addr in grid.populated():
            if start.row <= addr.row <= end.row and start.col <= addr.col <= end.col:
                items.append(cell_value(grid_id, addr))
        return _Set(items)

    def name_value(name: str):
        if name in formula_chunks:
            return computed(name, formula_chunks[name].expr_text, None)
        if name in grids:
            grid = grids[name]
            return _Set([cell_value(name, addr) for addr in grid.populated()])
        return ErrorValue("NAME")

    def scalar(v):
        if isinstance(v, _Set):
            return ErrorValue("VALUE")
        return v

    def walk(e, ctx):
        if isinstance(e, NumberLit):
            return e.value
        if isinstance(e, TextLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, CellRef):
            grid_id = e.grid or ctx
            if grid_id not in grids:
                return ErrorValue("NAME")
            return cell_value(grid_id, e.addr)
        if isinstance(e, RangeRef):
            return range_values(e.grid or ctx, e.start, e.end)
        if isinstance(e, NameRef):
            return name_value(e.name)
        if isinstance(e, Unary):
            v = _num(scalar(walk(e.arg, ctx)))
            if isinstance(v, ErrorValue):
                return v
            return _finite(-v)
        if isinstance(e, Binary):
            return binary(e, ctx)
        if isinstance(e, Call):
            return call(e, ctx)
        raise TypeError(e)

    def binary(e: Binary, ctx):
        lhs = scalar(walk(e.lhs, ctx))
        rhs = scalar(walk(e.rhs, ctx))
        if isinstance(lhs, ErrorValue):
            return lhs
        if isinstance(rhs, ErrorValue):
            return rhs
        op = e.op
        if op == "&":
            return _text(lhs) + _text(rhs)
        if op in ("+", "-", "*", "/", "^"):
            a = _num(lhs)
            if isinstance(a, ErrorValue):
                return a
            b = _num(rhs)
            if isinstance(b, ErrorValue):
                return b
            if op == "+":
                return _finite(a + b)
            if op == "-":
                return _finite(a - b)
            if op == "*":
                return _finite(a * b)
            if op == "/":
                if b == 0.0:
                    return ErrorValue("DIV0")
                return _finite(a / b)
            try:
                return _finite(math.pow(a, b))
            except (OverflowError, ValueError, ZeroDivisionError):
                return ErrorValue("VALUE")
        if op in ("=", "<>"):
            same = equal(lhs, rhs)
            return same if op == "=" else not same
        return ordering(op, lhs, rhs)

    def equal(a, b) -> bool:
        if a is EMPTY or b is EMPTY:
            return a is b
        if isinstance(a, bool) != isinstance(b, bool):
            return False
        if _is_number(a) != _is_number(b):
            return False
        return a == b

    def ordering(op: str, a, b):
        if a is EMPTY and b is EMPTY:
            a, b = 0.0, 0.0
        elif a is EMPTY:
            a = 0.0 if _is_number(b) else "" if isinstance(b, str) else a
        elif b is EMPTY:
            b = 0.0 if _is_number(a) else "" if isinstance(a, str) else b
        comparable = (
            (_is_number(a) and _is_number(b))
            or (isinstance(a, str) and isinstance(b, str))
            or (isinstance(a, bool) and isinstance(b, bool))
        )
        if not comparable:
            return ErrorValue("VALUE")
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b

    def flatten(args, ctx):
        """Aggregate arguments in order; first error propagates."""
        items = []
        for arg in args:
            v = walk(arg, ctx)
            if isinstance(v, _Set):
                for member in v.items:
                    if isinstance(member, ErrorValue):
                        return member
                    items.append(member)
            elif isinstance(v, ErrorValue):
                return v
            else:
                items.append(v)
        return items

    def call(e: Call, ctx):
        fn = e.fn
        if fn in ("SUM", "AVERAGE", "MIN", "MAX", "COUNT"):
            flat = flatten(e.args, ctx)
            if isinstance(flat, ErrorValue):
                return flat
            numbers = [v for v in flat if _is_number(v)]
            if fn == "COUNT":
                return float(len(numbers))
            if fn == "SUM":
                return _finite(math.fsum(numbers))
            if fn == "AVERAGE":
                if not numbers:
                    return ErrorValue("DIV0")
                return _finite(math.fsum(numbers) / len(numbers))
            if not numbers:
                return ErrorValue("VALUE")
            return min(numbers) if fn == "MIN" else max(numbers)
        if fn == "IF":
            cond = scalar(walk(e.args[0], ctx))
            if isinstance(cond, ErrorValue):
                return cond
            if not isinstance(cond, bool):
                return ErrorValue("VALUE")
            return walk(e.args[1] if cond else e.args[2], ctx)
        if fn == "ABS":
            v = _num(scalar(walk(e.args[0], ctx)))
            if isinstance(v, ErrorValue):
                return v
            return _finite(abs(v))
        if fn == "ROUND":
            x = _num(scalar(walk(e.args[0], ctx)))
            if isinstance(x, ErrorValue):
                return x
            d = _num(scalar(walk(e.args[1], ctx)))
            if isinstance(d, ErrorValue):
                return d
            return _finite(_round_half_away(x, int(d)))
        if fn in ("AND", "OR"):
            flags = []
            for arg in e.args:
                v = scalar(walk(arg, ctx))
                if isinstance(v, ErrorValue):
                    return v
                if not isinstance(v, bool):
                    return ErrorValue("VALUE")
                flags.append(v)
            return all(flags) if fn == "AND" else any(flags)
        if fn == "NOT":
            v = scalar(walk(e.args[0], ctx))
            if isinstance(v, ErrorValue):
                return v
            if not isinstance(v, bool):
                return ErrorValue("VALUE")
            return not v
        if fn == "CONCAT":
            parts = []
            for arg in e.args:
                v = _text(scalar(walk(arg, ctx)))
                if isinstance(v, ErrorValue):
                    return v
                parts.append(v)
            return "".join(parts)
        raise AssertionError(f"unreachable function {fn}")

    values: dict[str, object] = {}
    for grid in grids.values():
        for addr in grid.populated():
            if not isinstance(grid.cells[addr].parsed, FormulaCell):
                values[key_of(grid.id, addr)] = grid.cells[addr].parsed
    for grid in grids.values():
        for addr in grid.populated():
            if isinstance(grid.cells[addr].parsed, FormulaCell):
                key = key_of(grid.id, addr)
                values[key] = computed(key, grid.cells[addr].parsed.expr_text, grid.id)
    for chunk in doc.chunks:
        if isinstance(chunk, Formula):
            values[chunk.id] = computed(chunk.id, chunk.expr_text, None)
        elif isinstance(chunk, Assertion):
            values[chunk.id] = computed(chunk.id, chunk.expr_text, None)
    return values
